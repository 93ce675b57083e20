"""Classifier outputs, calibration targets and (score, correctness) extraction.

Class indices are 0-based throughout, in memory and in CSV files.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fileio import atomic_write_text

ROW_SUM_TOL = 1e-4


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EvalSet:
    """``N x K`` per-class scores in ``[0, 1]`` plus 0-based labels.

    ``predicted`` optionally pins the top-1 class of each row.  It is set by
    top-1 recalibration, which replaces the top score and could otherwise let
    a lower class overtake it.  When ``None`` the argmax is used.
    """

    scores: np.ndarray
    labels: np.ndarray
    predicted: np.ndarray | None = None

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        labels = np.asarray(self.labels)
        if scores.ndim != 2 or scores.shape[0] < 1 or scores.shape[1] < 1:
            raise ValueError(f"scores must be a non-empty N x K matrix, got shape {scores.shape}")
        n, k = scores.shape
        labels = _as_labels(labels, n, k)
        bad = ~np.isfinite(scores).all(axis=1) | (scores < 0).any(axis=1) | (scores > 1).any(axis=1)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise ValueError(f"row {row}: scores must be finite and within [0, 1]")
        object.__setattr__(self, "scores", _frozen(scores))
        object.__setattr__(self, "labels", _frozen(labels))
        if self.predicted is not None:
            object.__setattr__(self, "predicted", _frozen(_as_labels(self.predicted, n, k, "predicted")))

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]

    @property
    def n_classes(self) -> int:
        return self.scores.shape[1]

    def ranking(self) -> np.ndarray:
        """Class indices of each row by descending score (ties by class index).

        A pinned ``predicted`` class always ranks first.
        """
        key = -self.scores
        if self.predicted is not None:
            key = key.copy()
            key[np.arange(self.n_samples), self.predicted] = -np.inf
        return np.argsort(key, axis=1, kind="stable")

    def top1(self) -> np.ndarray:
        if self.predicted is not None:
            return self.predicted
        return np.argmax(self.scores, axis=1)

    def __eq__(self, other):
        if not isinstance(other, EvalSet):
            return NotImplemented
        pa, pb = self.top1(), other.top1()
        return (
            self.scores.shape == other.scores.shape
            and np.array_equal(self.scores, other.scores)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(pa, pb)
        )


def _as_labels(labels, n, k, name="labels"):
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {labels.shape}")
    if labels.dtype.kind == "f":
        if not np.all(np.isfinite(labels)) or np.any(labels != np.round(labels)):
            raise ValueError(f"{name} must be integers")
    elif labels.dtype.kind not in "iu":
        raise ValueError(f"{name} must be integers, got dtype {labels.dtype}")
    labels = labels.astype(np.intp)
    bad = (labels < 0) | (labels >= k)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ValueError(f"row {row}: {name} value {labels[row]} out of range for {k} classes")
    return labels


def softmax(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    z = raw - raw.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def from_logits(raw, labels) -> EvalSet:
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise ValueError(f"logits must be an N x K matrix, got shape {raw.shape}")
    bad = ~np.isfinite(raw).all(axis=1)
    if bad.any():
        raise ValueError(f"row {int(np.flatnonzero(bad)[0])}: logits contain NaN or Inf")
    return EvalSet(softmax(raw), labels)


def from_probs(probs, labels, check_sums: bool = True) -> EvalSet:
    """Wrap probability rows without renormalising them.

    With ``check_sums`` each row must sum to 1 within ``ROW_SUM_TOL``.
    Classwise-recalibrated scores do not sum to 1; load them with
    ``check_sums=False``.
    """
    probs = np.asarray(probs, dtype=float)
    ev = EvalSet(probs, labels)
    if check_sums:
        dev = np.abs(ev.scores.sum(axis=1) - 1.0)
        if np.any(dev > ROW_SUM_TOL):
            row = int(np.argmax(dev > ROW_SUM_TOL))
            raise ValueError(f"row {row}: probabilities sum to {ev.scores[row].sum():.6g}, not 1")
    return ev


@dataclass(frozen=True)
class CalibrationTarget:
    """``kind`` is ``"class"`` (index ``k``), ``"top"`` or ``"within"`` (rank ``r``, 1-based)."""

    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in ("class", "top", "within"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if int(self.index) != self.index:
            raise ValueError(f"target index must be an integer, got {self.index!r}")
        object.__setattr__(self, "index", int(self.index))
        if self.kind == "class" and self.index < 0:
            raise ValueError(f"class index must be >= 0, got {self.index}")
        if self.kind != "class" and self.index < 1:
            raise ValueError(f"rank r must be >= 1, got {self.index}")

    @classmethod
    def class_k(cls, k: int) -> "CalibrationTarget":
        return cls("class", k)

    @classmethod
    def top(cls, r: int = 1) -> "CalibrationTarget":
        return cls("top", r)

    @classmethod
    def within(cls, r: int) -> "CalibrationTarget":
        return cls("within", r)

    @classmethod
    def parse(cls, text: str) -> "CalibrationTarget":
        m = re.fullmatch(r"\s*(class|top|within)\s*:\s*(\d+)\s*", text)
        if not m:
            raise ValueError(f"bad target {text!r}; expected class:K, top:R or within:R")
        return cls(m.group(1), int(m.group(2)))

    def check(self, n_classes: int) -> None:
        if self.kind == "class" and self.index >= n_classes:
            raise ValueError(f"class {self.index} out of range for {n_classes} classes")
        if self.kind != "class" and self.index > n_classes:
            raise ValueError(f"rank {self.index} exceeds the number of classes ({n_classes})")

    def __str__(self) -> str:
        return f"{self.kind}:{self.index}"


@dataclass(frozen=True, eq=False)
class ScoredSamples:
    """(score, correct) pairs sorted by score; ties keep sample order."""

    scores: np.ndarray
    correct: np.ndarray
    target: CalibrationTarget

    def __len__(self) -> int:
        return self.scores.size


def target_pairs(ev: EvalSet, target: CalibrationTarget) -> tuple[np.ndarray, np.ndarray]:
    """Unsorted per-sample (score, correct) for ``target``, in sample order."""
    target.check(ev.n_classes)
    rows = np.arange(ev.n_samples)
    if target.kind == "class":
        k = target.index
        return ev.scores[:, k].copy(), (ev.labels == k).astype(float)
    order = ev.ranking()
    if target.kind == "top":
        cls = order[:, target.index - 1]
        return ev.scores[rows, cls], (cls == ev.labels).astype(float)
    top = order[:, : target.index]
    score = np.take_along_axis(ev.scores, top, axis=1).sum(axis=1)
    correct = (top == ev.labels[:, None]).any(axis=1).astype(float)
    return score, correct


def score_target(ev: EvalSet, target: CalibrationTarget) -> ScoredSamples:
    score, correct = target_pairs(ev, target)
    order = np.argsort(score, kind="stable")
    return ScoredSamples(_frozen(score[order]), _frozen(correct[order]), target)


def scored_from_pairs(scores, correct, target: CalibrationTarget | None = None) -> ScoredSamples:
    """Build sorted samples directly from raw (score, correct) arrays."""
    scores = np.asarray(scores, dtype=float).ravel()
    correct = np.asarray(correct, dtype=float).ravel()
    if scores.shape != correct.shape:
        raise ValueError("scores and correct differ in length")
    order = np.argsort(scores, kind="stable")
    return ScoredSamples(_frozen(scores[order]), _frozen(correct[order]), target or CalibrationTarget.top(1))


# -- CSV -------------------------------------------------------------------

def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def read_csv(path, kind: str = "probs") -> EvalSet:
    """Read ``label,s_0,...,s_{K-1}`` rows; a header row is optional.

    ``kind`` is ``"logits"`` (softmaxed), ``"probs"`` (rows must sum to 1) or
    ``"scores"`` (range-checked only).  A header naming a ``pred`` column
    restores pinned top-1 predictions written by :func:`write_csv`.
    """
    if kind not in ("logits", "probs", "scores"):
        raise ValueError(f"unknown input kind {kind!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(f.strip() for f in r)]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    pred_col = None
    if not _is_number(rows[0][0]):
        header = [h.strip() for h in rows.pop(0)]
        if "pred" in header:
            pred_col = header.index("pred")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(f"{path}: row {i} has {len(r)} fields, expected {width}")
    try:
        table = np.array([[float(f) for f in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric field ({exc})") from None
    pred = None
    if pred_col is not None:
        pred = table[:, pred_col]
        table = np.delete(table, pred_col, axis=1)
    labels, values = table[:, 0], table[:, 1:]
    if values.shape[1] < 1:
        raise ValueError(f"{path}: no score columns")
    if kind == "logits":
        ev = from_logits(values, labels)
    else:
        ev = from_probs(values, labels, check_sums=kind == "probs")
    if pred is not None:
        ev = EvalSet(ev.scores, ev.labels, pred)
    return ev


def format_csv(ev: EvalSet) -> str:
    """Serialise with full float precision; a ``pred`` column is added only
    when some pinned prediction differs from the row argmax."""
    k = ev.n_classes
    with_pred = ev.predicted is not None and not np.array_equal(ev.predicted, np.argmax(ev.scores, axis=1))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", *([f"s_{i}" for i in range(k)]), *(["pred"] if with_pred else [])])
    for i in range(ev.n_samples):
        row = [str(int(ev.labels[i]))] + [repr(float(s)) for s in ev.scores[i]]
        if with_pred:
            row.append(str(int(ev.predicted[i])))
        w.writerow(row)
    return buf.getvalue()


def write_csv(ev: EvalSet, path) -> None:
    atomic_write_text(Path(path), format_csv(ev))
