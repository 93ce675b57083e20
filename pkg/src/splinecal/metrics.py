"""Binned calibration metrics (ECE, MCE), top-1 Brier score and top-r accuracy.

Bins are equal width with half-open edges ``[b/n, (b+1)/n)``; a score of
exactly 1.0 falls in the last bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import ks_of
from .dataset import CalibrationTarget, EvalSet, ScoredSamples, score_target

DEFAULT_BINS = 25


@dataclass(frozen=True, eq=False)
class BinnedReliability:
    edges: np.ndarray
    count: np.ndarray
    mean_confidence: np.ndarray
    accuracy: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.count.size

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(self.accuracy - self.mean_confidence)


def reliability(ss: ScoredSamples, n_bins: int = DEFAULT_BINS) -> BinnedReliability:
    """Per-bin counts, mean confidence and accuracy; empty bins hold zeros."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    if len(ss) == 0:
        raise ValueError("no samples to bin")
    edges = np.arange(n_bins + 1) / n_bins
    idx = np.clip(np.searchsorted(edges, ss.scores, side="right") - 1, 0, n_bins - 1)
    count = np.bincount(idx, minlength=n_bins)
    conf_sum = np.bincount(idx, weights=ss.scores, minlength=n_bins)
    acc_sum = np.bincount(idx, weights=ss.correct, minlength=n_bins)
    occupied = count > 0
    conf = np.zeros(n_bins)
    acc = np.zeros(n_bins)
    conf[occupied] = conf_sum[occupied] / count[occupied]
    acc[occupied] = acc_sum[occupied] / count[occupied]
    return BinnedReliability(edges, count, conf, acc)


def ece(ss: ScoredSamples, n_bins: int = DEFAULT_BINS) -> float:
    rel = reliability(ss, n_bins)
    return float(np.sum(rel.count * rel.gaps) / len(ss))


def mce(ss: ScoredSamples, n_bins: int = DEFAULT_BINS) -> float:
    rel = reliability(ss, n_bins)
    return float(np.max(rel.gaps[rel.count > 0]))


def brier_top1(ss: ScoredSamples) -> float:
    """Mean squared gap between the target score and its 0/1 correctness."""
    if len(ss) == 0:
        raise ValueError("no samples")
    return float(np.mean((ss.scores - ss.correct) ** 2))


def accuracy_topr(ev: EvalSet, r: int = 1) -> float:
    if not 1 <= r <= ev.n_classes:
        raise ValueError(f"r must be in [1, {ev.n_classes}], got {r}")
    if r == 1:
        hit = ev.top1() == ev.labels
    else:
        hit = (ev.ranking()[:, :r] == ev.labels[:, None]).any(axis=1)
    return float(np.mean(hit))


def report(ev: EvalSet, target: CalibrationTarget, n_bins: int = DEFAULT_BINS, knots: int | None = None) -> dict:
    """The JSON metrics block for one target."""
    ss = score_target(ev, target)
    return {
        "n": ev.n_samples,
        "target": str(target),
        "ks": ks_of(ss),
        "ece": ece(ss, n_bins),
        "mce": mce(ss, n_bins),
        "brier_top1": brier_top1(ss),
        "accuracy": accuracy_topr(ev, 1),
        "n_bins": n_bins,
        "knots": knots,
    }
