"""Spline recalibration: fit the cumulative accuracy ``h`` against fractile,
differentiate, and read the slope back as a function of score.

The slope of ``h`` at fractile ``t`` estimates P(correct | score = s(t)), so
evaluating it at each calibration sample's fractile gives a sampled table
from score to calibrated probability.  New scores are mapped by binary search
and linear interpolation in that table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .curves import CumulativeCurves, cumulative
from .dataset import CalibrationTarget, EvalSet, ScoredSamples, score_target, target_pairs
from .fileio import atomic_write_text
from .spline import Spline, fit

DEFAULT_KNOTS = 6


@dataclass(frozen=True, eq=False)
class RecalibrationMap:
    calib_scores: np.ndarray
    gamma_values: np.ndarray
    target: CalibrationTarget
    knots_used: int

    def __post_init__(self):
        xs = np.array(self.calib_scores, dtype=float)
        gs = np.array(self.gamma_values, dtype=float)
        if xs.ndim != 1 or xs.shape != gs.shape:
            raise ValueError("calib_scores and gamma_values must be 1-D and equal length")
        if xs.size == 0:
            raise ValueError("empty recalibration map")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("calib_scores must be strictly increasing")
        if not np.all(np.isfinite(gs)) or np.any(gs < 0) or np.any(gs > 1):
            raise ValueError("gamma_values must lie in [0, 1]")
        xs.setflags(write=False)
        gs.setflags(write=False)
        object.__setattr__(self, "calib_scores", xs)
        object.__setattr__(self, "gamma_values", gs)

    def __call__(self, sigma):
        return apply(self, sigma)

    def to_dict(self) -> dict:
        return {
            "target": str(self.target),
            "knots": self.knots_used,
            "scores": self.calib_scores.tolist(),
            "gamma": self.gamma_values.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RecalibrationMap":
        try:
            return cls(np.array(d["scores"], dtype=float), np.array(d["gamma"], dtype=float),
                       CalibrationTarget.parse(d["target"]), int(d["knots"]))
        except KeyError as exc:
            raise ValueError(f"map document missing field {exc}") from None


@dataclass(frozen=True, eq=False)
class FitResult:
    """A built map together with the intermediate curves and spline."""

    map: RecalibrationMap
    curves: CumulativeCurves
    spline: Spline
    slope: np.ndarray  # unclamped h'(i/N), i = 1..N


def fit_curves(ss: ScoredSamples, n_knots: int = DEFAULT_KNOTS) -> FitResult:
    n = len(ss)
    if n < n_knots:
        raise ValueError(f"need at least {n_knots} calibration samples for {n_knots} knots, got {n}")
    c = cumulative(ss)
    spline = fit(c.fractiles, c.h, n_knots)
    slope = spline.derivative(c.fractiles[1:])
    gamma = np.clip(slope, 0.0, 1.0)
    # tied scores share one table entry holding their mean slope
    xs, start, counts = np.unique(c.sorted_scores, return_index=True, return_counts=True)
    gs = np.add.reduceat(gamma, start) / counts if xs.size < n else gamma
    gs = np.clip(gs, 0.0, 1.0)
    m = RecalibrationMap(xs, gs, ss.target, n_knots)
    return FitResult(m, c, spline, slope)


def build(ss: ScoredSamples, n_knots: int = DEFAULT_KNOTS) -> RecalibrationMap:
    return fit_curves(ss, n_knots).map


def apply(m: RecalibrationMap, sigma):
    """Calibrated probability for score(s) ``sigma``.

    Scores outside the calibration range take the nearest end value.
    """
    s = np.asarray(sigma, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s < 0) or np.any(s > 1):
        raise ValueError("scores to recalibrate must lie in [0, 1]")
    out = np.interp(s, m.calib_scores, m.gamma_values)
    return float(out) if out.ndim == 0 else out


def identity_map(target: CalibrationTarget) -> RecalibrationMap:
    return RecalibrationMap(np.array([0.0, 1.0]), np.array([0.0, 1.0]), target, 0)


def _index(maps) -> dict:
    if isinstance(maps, RecalibrationMap):
        maps = [maps]
    if isinstance(maps, dict):
        maps = maps.values()
    out = {}
    for m in maps:
        if m.target in out:
            raise ValueError(f"duplicate map for target {m.target}")
        out[m.target] = m
    return out


def recalibrate_evalset(ev: EvalSet, maps: Iterable[RecalibrationMap] | RecalibrationMap, mode: str = "top1") -> EvalSet:
    """Apply maps to an EvalSet.

    ``top1``: only each row's top score is replaced, and the top-1 class is
    pinned so predictions (and accuracy) stay identical.  ``classwise``: the
    map for class ``k`` transforms column ``k``; rows are not renormalised.
    """
    by_target = _index(maps)
    if mode == "top1":
        t = CalibrationTarget.top(1)
        if t not in by_target:
            raise ValueError(f"top1 mode needs a map for target {t}; got {sorted(map(str, by_target))}")
        pred = ev.top1()
        rows = np.arange(ev.n_samples)
        scores = np.array(ev.scores)
        scores[rows, pred] = apply(by_target[t], scores[rows, pred])
        return EvalSet(scores, ev.labels, pred)
    if mode == "classwise":
        missing = [k for k in range(ev.n_classes) if CalibrationTarget.class_k(k) not in by_target]
        if missing:
            raise ValueError(f"classwise mode is missing maps for classes {missing}")
        scores = np.column_stack([
            apply(by_target[CalibrationTarget.class_k(k)], ev.scores[:, k]) for k in range(ev.n_classes)
        ])
        return EvalSet(scores, ev.labels, ev.predicted)
    raise ValueError(f"unknown mode {mode!r}; expected 'top1' or 'classwise'")


def build_maps(ev: EvalSet, mode: str = "top1", n_knots: int = DEFAULT_KNOTS) -> list[RecalibrationMap]:
    """Fit the maps a mode needs (one per class for ``classwise``)."""
    if mode == "classwise":
        return [build(score_target(ev, CalibrationTarget.class_k(k)), n_knots) for k in range(ev.n_classes)]
    if mode == "top1":
        return [build(score_target(ev, CalibrationTarget.top(1)), n_knots)]
    raise ValueError(f"unknown mode {mode!r}; expected 'top1' or 'classwise'")


def save_maps(maps: list[RecalibrationMap], path) -> None:
    if len(maps) == 1:
        doc = maps[0].to_dict()
    else:
        doc = {"maps": [m.to_dict() for m in maps]}
    atomic_write_text(Path(path), json.dumps(doc, indent=1) + "\n")


def load_maps(path) -> list[RecalibrationMap]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and "maps" in doc:
        return [RecalibrationMap.from_dict(d) for d in doc["maps"]]
    return [RecalibrationMap.from_dict(doc)]


def recalibrated_pairs(ev: EvalSet, m: RecalibrationMap):
    """(calibrated score, correct) per sample for the map's own target."""
    score, correct = target_pairs(ev, m.target)
    return apply(m, score), correct
