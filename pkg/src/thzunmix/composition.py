"""Mixing proportions of new samples against a fixed signature library.

The estimate minimizes ``||x - A r||_1`` over the probability simplex.  It is
solved as the linear program

    min 1^T (u+ + u-)   s.t.   A r + u+ - u- = x,   1^T r = 1,   r, u+, u- >= 0

with the dense simplex solver in :mod:`thzunmix.lp`, which also returns the
dual certificate used to confirm optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SignatureSet, StandardizedData
from .lp import LPError, lp_solve

__all__ = ["CompositionResult", "estimate_composition", "estimate_compositions", "l1_objective", "GAP_TOL"]

GAP_TOL = 1e-8


@dataclass(frozen=True)
class CompositionResult:
    r: np.ndarray
    objective: float
    gap: float
    materials: tuple[str, ...]


def l1_objective(x, A, r) -> float:
    return float(np.abs(np.asarray(x) - np.asarray(A) @ np.asarray(r)).sum())


def _library(A, grid=None):
    if isinstance(A, SignatureSet):
        if grid is not None and not A.grid.same_as(grid):
            raise ValueError("sample grid does not match the signature library grid")
        return A.S, A.labels
    A = np.asarray(A, dtype=float)
    return A, tuple(f"m{i + 1}" for i in range(A.shape[1]))


def estimate_composition(x, A, grid=None) -> CompositionResult:
    """Simplex-constrained L1 fit of spectrum ``x`` by the columns of ``A``."""
    M, labels = _library(A, grid)
    x = np.asarray(x, dtype=float).ravel()
    k, q = M.shape
    if q < 2:
        raise ValueError("composition estimation needs a library of q >= 2 signatures")
    if x.size != k:
        raise ValueError(f"spectrum has {x.size} bands, library has {k}")
    # scale to O(1) for the pivoting tolerances; r is invariant to a common scale
    s = max(np.abs(M).max(), np.abs(x).max(), 1e-300)
    Ms, xs = M / s, x / s
    c = np.concatenate([np.zeros(q), np.ones(2 * k)])
    A_eq = np.zeros((k + 1, q + 2 * k))
    A_eq[:k, :q] = Ms
    A_eq[:k, q:q + k] = np.eye(k)
    A_eq[:k, q + k:] = -np.eye(k)
    A_eq[k, :q] = 1.0
    b_eq = np.concatenate([xs, [1.0]])
    try:
        res = lp_solve(c, A_eq=A_eq, b_eq=b_eq)
    except LPError as exc:
        raise RuntimeError(f"internal failure in composition LP: {exc}") from exc
    r = np.maximum(res.x[:q], 0.0)
    r = r / r.sum()
    # certificate: exact L1 value at the returned r against the dual bound
    primal = l1_objective(xs, Ms, r)
    gap = max(primal - res.dual_objective, 0.0) / max(1.0, primal)
    if gap > GAP_TOL or res.dual_residual > 1e-9:
        raise RuntimeError(f"composition LP not certified optimal (gap {gap:.3g}, dual residual {res.dual_residual:.3g})")
    return CompositionResult(r, l1_objective(x, M, r), gap, tuple(labels))


def estimate_compositions(X, A) -> np.ndarray:
    """Proportions (q x l) for every column of ``X`` (array or :class:`StandardizedData`)."""
    grid = X.grid if isinstance(X, StandardizedData) else None
    M = X.X if isinstance(X, StandardizedData) else np.asarray(X, dtype=float)
    return np.column_stack([estimate_composition(M[:, j], A, grid).r for j in range(M.shape[1])])
