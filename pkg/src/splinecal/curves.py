"""Cumulative accuracy / cumulative score curves and the KS calibration error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ScoredSamples


@dataclass(frozen=True, eq=False)
class CumulativeCurves:
    """``h`` (cumulative accuracy) and ``h_tilde`` (cumulative score) over the
    sorted samples, both of length ``N + 1`` with ``h[0] == h_tilde[0] == 0``.

    ``fractiles[i] == i / N`` and ``sorted_scores[i - 1]`` is the score at
    fractile ``i / N``.  ``gap`` is ``h - h_tilde`` accumulated directly from
    the per-sample increments ``correct - score``: it avoids cancellation
    between two large running sums, and when all increments share a sign it
    is exactly monotone, so its maximum sits at the last index.
    """

    h: np.ndarray
    h_tilde: np.ndarray
    fractiles: np.ndarray
    sorted_scores: np.ndarray
    gap: np.ndarray

    @property
    def n(self) -> int:
        return self.sorted_scores.size


def cumulative(ss: ScoredSamples) -> CumulativeCurves:
    n = len(ss)
    if n == 0:
        raise ValueError("cannot build cumulative curves from zero samples")
    scores = np.asarray(ss.scores, dtype=float)
    if np.any(np.diff(scores) < 0):
        raise ValueError("scored samples must be sorted ascending by score")
    correct = np.asarray(ss.correct, dtype=float)
    h = np.zeros(n + 1)
    h_tilde = np.zeros(n + 1)
    gap = np.zeros(n + 1)
    # running sums of the raw increments, divided once, keep h[N] equal to mean(correct)
    h[1:] = np.cumsum(correct) / n
    h_tilde[1:] = np.cumsum(scores) / n
    gap[1:] = np.cumsum(correct - scores) / n
    fractiles = np.arange(n + 1) / n
    for a in (h, h_tilde, gap, fractiles):
        a.setflags(write=False)
    return CumulativeCurves(h, h_tilde, fractiles, ss.scores, gap)


def ks_error(c: CumulativeCurves) -> float:
    return float(np.max(np.abs(c.gap)))


def ks_of(ss: ScoredSamples) -> float:
    return ks_error(cumulative(ss))
