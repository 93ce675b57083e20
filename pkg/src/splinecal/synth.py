"""Synthetic classifier outputs with a known P(correct | top score).

Random numbers come from numpy's PCG64 bit generator (``numpy.random.default_rng``),
which produces the same stream on every platform for a given seed.  All draws
for one spec come from a single generator in a fixed order; to generate in
parallel chunks, give each chunk its own ``SynthSpec`` with a seed taken from
``numpy.random.SeedSequence(seed).spawn``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import EvalSet

LINKS = ("identity", "power", "sharpen")


@dataclass(frozen=True)
class SynthSpec:
    """Top-class scores are uniform on ``[score_low, score_high)``.

    ``link`` sets the true accuracy ``g`` at top score ``s``:

    * ``identity``: ``g(s) = s`` (calibrated)
    * ``power``: ``g(s) = s ** param``
    * ``sharpen``: ``logit(g(s)) = logit(s) / param`` (``param`` acts as a temperature)
    """

    n_samples: int
    n_classes: int = 10
    score_low: float = 0.5
    score_high: float = 1.0
    link: str = "identity"
    param: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if not 0 <= self.score_low < self.score_high <= 1:
            raise ValueError(f"need 0 <= score_low < score_high <= 1, got [{self.score_low}, {self.score_high})")
        if self.score_low < 1 / self.n_classes:
            raise ValueError(
                f"score_low={self.score_low} is below 1/n_classes={1 / self.n_classes:.6g}; "
                "such a score cannot be the top score"
            )
        if self.link not in LINKS:
            raise ValueError(f"unknown link {self.link!r}; expected one of {LINKS}")
        if self.link != "identity" and not (np.isfinite(self.param) and self.param > 0):
            raise ValueError(f"link {self.link!r} needs a positive finite param, got {self.param}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def link_function(link: str, param: float = 1.0):
    if link == "identity":
        return lambda s: np.asarray(s, dtype=float)
    if link == "power":
        return lambda s: np.asarray(s, dtype=float) ** param
    if link == "sharpen":
        def g(s):
            s = np.asarray(s, dtype=float)
            a = s ** (1 / param)
            b = (1 - s) ** (1 / param)
            return a / (a + b)
        return g
    raise ValueError(f"unknown link {link!r}")


def true_accuracy(spec: SynthSpec):
    return link_function(spec.link, spec.param)


def generate(spec: SynthSpec) -> EvalSet:
    """Draw an EvalSet whose top-1 correctness is Bernoulli(g(top score)).

    The remaining mass ``1 - s`` is split over the other classes with
    Dirichlet(1) weights, shrunk toward an even split just enough that no
    other class reaches ``s``.  A wrong sample's label is uniform over the
    non-top classes.
    """
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n_samples, spec.n_classes
    top_score = rng.uniform(spec.score_low, spec.score_high, n)
    top_class = rng.integers(0, k, n)
    correct = rng.random(n) < true_accuracy(spec)(top_score)
    wrong_offset = rng.integers(1, k, n)
    weights = rng.dirichlet(np.ones(k - 1), n)

    rest = 1.0 - top_score
    even = 1.0 / (k - 1)
    wmax = weights.max(axis=1)
    # largest mix toward the Dirichlet draw keeping every other score below the top one
    with np.errstate(divide="ignore", invalid="ignore"):
        limit = (0.999 * top_score / np.where(rest > 0, rest, 1.0) - even) / (wmax - even)
    lam = np.clip(np.where(wmax > even, limit, 1.0), 0.0, 1.0)
    mixed = lam[:, None] * weights + (1 - lam[:, None]) * even
    others = rest[:, None] * mixed

    scores = np.empty((n, k))
    cols = (top_class[:, None] + 1 + np.arange(k - 1)) % k
    rows = np.arange(n)
    scores[rows[:, None], cols] = others
    scores[rows, top_class] = top_score
    labels = np.where(correct, top_class, (top_class + wrong_offset) % k)
    return EvalSet(scores, labels)
