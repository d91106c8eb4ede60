"""Reference unmixers: NMF by alternating least squares and SPA."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

__all__ = ["nmf_als", "NMFResult", "spa", "nmf_signatures"]


@dataclass
class NMFResult:
    W: np.ndarray
    H: np.ndarray
    D: float
    trial: int
    D_trace: list[float]

    def __iter__(self):
        yield self.W
        yield self.H
        yield self.D


def _D(X, W, H):
    return float(np.linalg.norm(X - W @ H) / np.sqrt(X.size))


_MAX_ENUM_RANK = 8
_SUPPORTS: dict[tuple[int, int], np.ndarray] = {}


def _support_table(r: int, size: int) -> np.ndarray:
    key = (r, size)
    if key not in _SUPPORTS:
        _SUPPORTS[key] = np.array(list(itertools.combinations(range(r), size)), dtype=int)
    return _SUPPORTS[key]


def _nnls_columns(A, B):
    """Column-wise exact NNLS: argmin_{Z >= 0} ||A Z - B||.

    For small rank every support is tried on the normal equations at once
    (the minimizer is the best nonnegative restricted least-squares
    solution); larger problems go column by column through scipy.
    """
    r = A.shape[1]
    if r > _MAX_ENUM_RANK:
        return np.column_stack([nnls(A, B[:, j])[0] for j in range(B.shape[1])])
    G = A.T @ A
    C = A.T @ B
    n = B.shape[1]
    best = np.zeros(n)  # objective relative to ||b||^2; empty support gives 0
    Z = np.zeros((r, n))
    for size in range(1, r + 1):
        J = _support_table(r, size)  # (m, size)
        GJ = G[J[:, :, None], J[:, None, :]]  # (m, size, size)
        CJ = C[J]  # (m, size, n)
        try:
            ZJ = np.linalg.solve(GJ, CJ)
        except np.linalg.LinAlgError:
            ZJ = np.stack([np.linalg.lstsq(g, c, rcond=None)[0] for g, c in zip(GJ, CJ)])
        obj = -2.0 * np.sum(ZJ * CJ, axis=1) + np.sum(ZJ * (GJ @ ZJ), axis=1)  # (m, n)
        obj = np.where(np.all(ZJ >= 0, axis=1), obj, np.inf)
        k = np.argmin(obj, axis=0)
        ok = obj[k, np.arange(n)] < best
        if ok.any():
            cols = np.flatnonzero(ok)
            best[cols] = obj[k[cols], cols]
            full = np.zeros((J.shape[0], r, n))
            full[np.arange(J.shape[0])[:, None], J, :] = ZJ
            Z[:, cols] = full[k[cols], :, cols].T
    return Z


def _half_step(A, B, Z_old, D_old, D_of):
    """Clipped least squares; fall back to exact NNLS if D would increase."""
    G = A.T @ A
    try:
        Z = np.linalg.solve(G, A.T @ B)
    except np.linalg.LinAlgError:
        Z = np.linalg.lstsq(A, B, rcond=None)[0]
    Z = np.maximum(Z, 0.0)
    D = D_of(Z)
    if D <= D_old:
        return Z, D
    Z = _nnls_columns(A, B)
    D = D_of(Z)
    if D <= D_old:
        return Z, D
    return Z_old, D_old


def nmf_als(X, k_rank: int, trials: int = 10, seed: int = 0, max_iter: int = 1000, tol: float = 1e-10) -> NMFResult:
    """Best-of-``trials`` nonnegative factorization ``X ~ W H``.

    Each trial starts from seeded uniform(0, 1) factors and alternates
    nonnegative least-squares half steps.  ``D = ||X - W H||_F / sqrt(k l)``
    is non-increasing within a trial; steps that would increase it are
    rejected.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a matrix")
    if np.any(X < 0):
        raise ValueError("NMF input must be nonnegative")
    k, ell = X.shape
    if not 1 <= k_rank <= min(k, ell):
        raise ValueError(f"k_rank must be in [1, {min(k, ell)}]")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    best = None
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        W = rng.uniform(0.0, 1.0, (k, k_rank))
        H = rng.uniform(0.0, 1.0, (k_rank, ell))
        D = _D(X, W, H)
        trace = [D]
        for _ in range(max_iter):
            D_prev = D
            H, D = _half_step(W, X, H, D, lambda Z: _D(X, W, Z))
            Wt, D = _half_step(H.T, X.T, W.T, D, lambda Z: _D(X, Z.T, H))
            W = Wt.T
            trace.append(D)
            if D_prev - D <= tol * max(D_prev, 1e-300):
                break
        if best is None or D < best.D:
            best = NMFResult(W, H, D, trial, trace)
    return best


def nmf_signatures(X, q: int, trials: int = 10, seed: int = 0, max_iter: int = 1000):
    """NMF signatures and abundances rescaled so abundance columns sum to ~1.

    Absorption data can carry tiny negative values from noise; they are
    clipped to zero before factorizing.  A positive per-component scale
    ``c`` (``W c^-1``, ``c H``) is fitted so that ``sum_i c_i h_i ~ 1``.
    """
    X = np.maximum(np.asarray(X, dtype=float), 0.0)
    res = nmf_als(X, q, trials, seed, max_iter)
    W, H = res.W, res.H
    c = np.linalg.lstsq(H.T, np.ones(H.shape[1]), rcond=None)[0]
    if np.any(c <= 0):
        # no positive rescaling fits; keep the raw factors
        c = np.ones(q)
    W = W / c
    H = H * c[:, None]
    return W, H, res


def spa(X, q: int, tol: float = 1e-12) -> list[int]:
    """Successive projection: pick the max-norm column, project it out, repeat."""
    R = np.array(X, dtype=float)
    if R.ndim != 2:
        raise ValueError("X must be a matrix")
    if q < 1 or R.shape[1] < q:
        raise ValueError(f"SPA needs 1 <= q <= number of columns ({R.shape[1]})")
    scale = np.linalg.norm(R, axis=0).max(initial=0.0)
    chosen = []
    for _ in range(q):
        norms = np.einsum("ij,ij->j", R, R)
        j = int(np.argmax(norms))
        if norms[j] <= (tol * scale) ** 2 or scale == 0:
            raise ValueError(f"rank collapse after {len(chosen)} selections")
        chosen.append(j)
        u = R[:, j] / np.sqrt(norms[j])
        R = R - np.outer(u, u @ R)
    return chosen
