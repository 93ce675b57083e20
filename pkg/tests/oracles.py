"""Reference implementations used only by the tests.

Each one takes a different route from the package code: explicit loops,
textbook recurrences or arbitrary precision, never the package internals.
"""

import math

import mpmath
import numpy as np


def natural_spline_interpolant(xs, ys):
    """Textbook natural cubic interpolating spline through (xs, ys).

    Second derivatives come from the (possibly non-uniform) tridiagonal system
    solved with the Thomas algorithm; evaluation uses the per-interval
    a + b dx + c dx^2 + d dx^3 form.
    """
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    n = len(xs)
    hs = [xs[i + 1] - xs[i] for i in range(n - 1)]
    # interior equations for second derivatives m_1..m_{n-2}
    sub, diag, sup, rhs = [], [], [], []
    for i in range(1, n - 1):
        sub.append(hs[i - 1])
        diag.append(2 * (hs[i - 1] + hs[i]))
        sup.append(hs[i])
        rhs.append(6 * ((ys[i + 1] - ys[i]) / hs[i] - (ys[i] - ys[i - 1]) / hs[i - 1]))
    m = len(diag)
    for i in range(1, m):
        w = sub[i] / diag[i - 1]
        diag[i] -= w * sup[i - 1]
        rhs[i] -= w * rhs[i - 1]
    inner = [0.0] * m
    for i in reversed(range(m)):
        inner[i] = (rhs[i] - (sup[i] * inner[i + 1] if i + 1 < m else 0.0)) / diag[i]
    sec = [0.0, *inner, 0.0]

    coef = []
    for i in range(n - 1):
        h = hs[i]
        a = ys[i]
        b = (ys[i + 1] - ys[i]) / h - h * (2 * sec[i] + sec[i + 1]) / 6
        c = sec[i] / 2
        d = (sec[i + 1] - sec[i]) / (6 * h)
        coef.append((a, b, c, d))

    def locate(x):
        for i in range(n - 1):
            if x <= xs[i + 1] or i == n - 2:
                return i
        raise AssertionError

    def value(x):
        i = locate(x)
        a, b, c, d = coef[i]
        t = x - xs[i]
        return a + b * t + c * t * t + d * t * t * t

    def slope(x):
        i = locate(x)
        _, b, c, d = coef[i]
        t = x - xs[i]
        return b + 2 * c * t + 3 * d * t * t

    return value, slope


def dense_lstsq_fit(u, v, knots):
    """Least-squares knot values, with the design built column by column from
    the textbook interpolant of each unit knot vector."""
    cols = []
    for k in range(len(knots)):
        e = np.zeros(len(knots))
        e[k] = 1.0
        val, _ = natural_spline_interpolant(knots, e)
        cols.append([val(x) for x in u])
    D = np.array(cols).T
    return np.linalg.inv(D.T @ D) @ (D.T @ np.asarray(v, dtype=float))


def binned(scores, correct, n_bins):
    """Loop-based equal-width bins; edges [b/n, (b+1)/n), 1.0 in the last bin."""
    bins = [[] for _ in range(n_bins)]
    for s, c in zip(scores, correct):
        placed = False
        for b in range(n_bins):
            lo, hi = b / n_bins, (b + 1) / n_bins
            if lo <= s < hi:
                bins[b].append((s, c))
                placed = True
                break
        if not placed:
            bins[-1].append((s, c))
    return bins


def ece_ref(scores, correct, n_bins):
    n = len(scores)
    total = 0.0
    for b in binned(scores, correct, n_bins):
        if b:
            conf = math.fsum(s for s, _ in b) / len(b)
            acc = math.fsum(c for _, c in b) / len(b)
            total += len(b) / n * abs(acc - conf)
    return total


def mce_ref(scores, correct, n_bins):
    gaps = []
    for b in binned(scores, correct, n_bins):
        if b:
            conf = math.fsum(s for s, _ in b) / len(b)
            acc = math.fsum(c for _, c in b) / len(b)
            gaps.append(abs(acc - conf))
    return max(gaps)


def brier_ref(scores, correct):
    return math.fsum((s - c) ** 2 for s, c in zip(scores, correct)) / len(scores)


def ks_ref(scores, correct):
    """Loop over samples sorted by score (stable), tracking both running sums."""
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    n = len(scores)
    h = ht = 0.0
    best = 0.0
    for i in order:
        h += correct[i] / n
        ht += scores[i] / n
        best = max(best, abs(h - ht))
    return best


def softmax_mp(row, dps=50):
    with mpmath.workdps(dps):
        e = [mpmath.e ** mpmath.mpf(x) for x in row]
        s = mpmath.fsum(e)
        return [float(x / s) for x in e]
