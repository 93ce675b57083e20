"""Least-squares natural cubic splines on uniformly spaced knots.

A spline with ``K`` knots is parameterised by its knot values ``y_hat``.  The
value at ``x`` is ``a(x) @ M @ y_hat`` where ``M`` (``2K x K``) maps knot values
to the stacked vector ``[second derivatives at knots; knot values]`` and
``a(x)`` holds the cubic Hermite-like weights for the interval containing
``x``.  Because the value is linear in ``y_hat``, fitting is ordinary linear
least squares, and the first derivative is available in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KnotGrid:
    n_knots: int
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if int(self.n_knots) != self.n_knots or self.n_knots < 3:
            raise ValueError(f"n_knots must be an integer >= 3, got {self.n_knots}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise ValueError(f"need finite lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n_knots - 1)

    @property
    def knots(self) -> np.ndarray:
        return self.lo + self.spacing * np.arange(self.n_knots)

    def locate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(j, u)``: interval index and offset ``x - knot_j``.

        The right endpoint ``hi`` belongs to the last interval (``u == h``).
        """
        x = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(x)) or np.any(x < self.lo) or np.any(x > self.hi):
            raise ValueError(f"x outside spline domain [{self.lo}, {self.hi}]")
        h = self.spacing
        j = np.clip(np.floor((x - self.lo) / h).astype(np.intp), 0, self.n_knots - 2)
        u = x - (self.lo + h * j)
        return j, u


def design_matrices(n_knots: int, spacing: float):
    """Build ``A`` ((K-2)x(K-2)), ``B`` ((K-2)xK) and ``M`` (2KxK)."""
    if n_knots < 3:
        raise ValueError(f"n_knots must be >= 3, got {n_knots}")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    m = n_knots - 2
    A = 4.0 * np.eye(m) + np.eye(m, k=1) + np.eye(m, k=-1)
    B = np.zeros((m, n_knots))
    for i in range(m):
        B[i, i : i + 3] = (1.0, -2.0, 1.0)
    B *= 6.0 / spacing**2
    # strictly diagonally dominant, so this only trips on a construction bug
    assert np.all(4.0 > np.abs(A).sum(axis=1) - 4.0)
    M = np.zeros((2 * n_knots, n_knots))
    M[1 : n_knots - 1] = np.linalg.solve(A, B)
    M[n_knots:] = np.eye(n_knots)
    return A, B, M


def _scatter(j, n_knots, wj, wj1, cj, cj1):
    j = np.atleast_1d(j)
    out = np.zeros((j.size, 2 * n_knots))
    rows = np.arange(j.size)
    out[rows, j] = wj
    out[rows, j + 1] = wj1
    out[rows, j + n_knots] = cj
    out[rows, j + 1 + n_knots] = cj1
    return out


def basis(x, grid: KnotGrid) -> np.ndarray:
    """Weights ``a(x)`` of length ``2K`` (or shape ``(n, 2K)`` for array ``x``)."""
    scalar = np.ndim(x) == 0
    j, u = grid.locate(np.atleast_1d(x))
    h = grid.spacing
    out = _scatter(
        j,
        grid.n_knots,
        -(u**3) / (6 * h) + u**2 / 2 - h * u / 3,
        u**3 / (6 * h) - h * u / 6,
        1.0 - u / h,
        u / h,
    )
    return out[0] if scalar else out


def basis_derivative(x, grid: KnotGrid) -> np.ndarray:
    """Weights ``a'(x)`` so that ``a'(x) @ M @ y_hat`` is the spline slope."""
    scalar = np.ndim(x) == 0
    j, u = grid.locate(np.atleast_1d(x))
    h = grid.spacing
    ones = np.ones_like(u)
    out = _scatter(
        j,
        grid.n_knots,
        -(u**2) / (2 * h) + u - h / 3,
        u**2 / (2 * h) - h / 6,
        -ones / h,
        ones / h,
    )
    return out[0] if scalar else out


def basis_second_derivative(x, grid: KnotGrid) -> np.ndarray:
    scalar = np.ndim(x) == 0
    j, u = grid.locate(np.atleast_1d(x))
    h = grid.spacing
    zeros = np.zeros_like(u)
    out = _scatter(j, grid.n_knots, 1.0 - u / h, u / h, zeros, zeros)
    return out[0] if scalar else out


@dataclass(frozen=True)
class Spline:
    grid: KnotGrid
    y_hat: np.ndarray
    M: np.ndarray = field(repr=False)
    residual: float = 0.0

    @classmethod
    def from_knot_values(cls, y_hat, grid: KnotGrid) -> "Spline":
        y_hat = np.array(y_hat, dtype=float)
        if y_hat.shape != (grid.n_knots,):
            raise ValueError(f"expected {grid.n_knots} knot values, got shape {y_hat.shape}")
        _, _, M = design_matrices(grid.n_knots, grid.spacing)
        y_hat.setflags(write=False)
        M.setflags(write=False)
        return cls(grid, y_hat, M)

    @property
    def coefficients(self) -> np.ndarray:
        """Stacked ``[second derivatives; values]`` at the knots."""
        return self.M @ self.y_hat

    def __call__(self, x):
        return basis(x, self.grid) @ self.coefficients

    def derivative(self, x):
        return basis_derivative(x, self.grid) @ self.coefficients

    def second_derivative(self, x):
        return basis_second_derivative(x, self.grid) @ self.coefficients


def fit(u, v, n_knots: int = 6, grid: KnotGrid | None = None) -> Spline:
    """Least-squares fit of a natural cubic spline to points ``(u_i, v_i)``.

    Solved through the normal equations with a Cholesky factorisation; the
    design has only ``n_knots`` columns so its conditioning is benign.
    ``grid`` defaults to ``n_knots`` uniform knots on ``[0, 1]``.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError(f"u and v differ in length ({u.size} vs {v.size})")
    if grid is None:
        grid = KnotGrid(n_knots)
    elif grid.n_knots != n_knots:
        raise ValueError(f"grid has {grid.n_knots} knots but n_knots={n_knots}")
    if u.size < n_knots:
        raise ValueError(f"need at least {n_knots} points to fit {n_knots} knots, got {u.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("v contains non-finite values")

    _, _, M = design_matrices(grid.n_knots, grid.spacing)
    D = basis(u, grid) @ M
    sv = np.linalg.svd(D, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-10:
        n_distinct = np.unique(u).size
        raise ValueError(
            f"rank-deficient spline design: {n_distinct} distinct abscissae for "
            f"{n_knots} knots (smallest/largest singular value {sv[-1]:.3g}/{sv[0]:.3g})"
        )
    L = np.linalg.cholesky(D.T @ D)
    y_hat = np.linalg.solve(L.T, np.linalg.solve(L, D.T @ v))
    residual = float(np.linalg.norm(D @ y_hat - v))
    y_hat.setflags(write=False)
    M.setflags(write=False)
    return Spline(grid, y_hat, M, residual)
