"""Spectral similarity metrics, signature matching and the 2-D PCA view."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import SignatureSet, StandardizedData

__all__ = ["sam_degrees", "rmse", "snr_db", "align_signatures", "Alignment", "pca_project_2d", "MAX_ALIGN_Q"]

MAX_ALIGN_Q = 8


def sam_degrees(s1, s2) -> float:
    """Spectral angle between two spectra, in degrees."""
    s1 = np.asarray(s1, dtype=float).ravel()
    s2 = np.asarray(s2, dtype=float).ravel()
    if s1.shape != s2.shape:
        raise ValueError(f"length mismatch: {s1.size} vs {s2.size}")
    n1, n2 = np.linalg.norm(s1), np.linalg.norm(s2)
    if n1 == 0 or n2 == 0:
        raise ValueError("spectral angle undefined for a zero spectrum")
    # arccos of the (clamped) cosine; near 0 deg arccos loses about half the
    # digits, so small angles use the equivalent half-angle chord form
    u, v = s1 / n1, s2 / n2
    cos = np.clip(u @ v, -1.0, 1.0)
    if cos > 0.9:
        return float(np.degrees(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v))))
    return float(np.degrees(np.arccos(cos)))


def rmse(s1, s2) -> float:
    s1 = np.asarray(s1, dtype=float).ravel()
    s2 = np.asarray(s2, dtype=float).ravel()
    if s1.shape != s2.shape:
        raise ValueError(f"length mismatch: {s1.size} vs {s2.size}")
    if s1.size == 0:
        raise ValueError("rmse needs at least one band")
    return float(np.sqrt(np.mean((s1 - s2) ** 2)))


def snr_db(signal_power: float, noise_power: float) -> float:
    """``10 log10((P_S - P_N) / P_N)`` where ``P_S`` includes the noise."""
    if not noise_power > 0:
        raise ValueError("noise power must be positive")
    if not signal_power > noise_power:
        raise ValueError("signal power must exceed noise power")
    return float(10.0 * np.log10((signal_power - noise_power) / noise_power))


@dataclass(frozen=True)
class Alignment:
    """Best matching of estimated to true signatures.

    ``permutation[i]`` is the estimated column matched to true column ``i``.
    """

    permutation: tuple[int, ...]
    sam: np.ndarray
    rmse: np.ndarray
    labels: tuple[str, ...]

    @property
    def mean_sam(self) -> float:
        return float(self.sam.mean())

    @property
    def mean_rmse(self) -> float:
        return float(self.rmse.mean())


def _matrix(S):
    return S.S if isinstance(S, SignatureSet) else np.asarray(S, dtype=float)


def align_signatures(S_est, S_true) -> Alignment:
    """Match columns by exhaustive search over all q! assignments (minimum mean SAM)."""
    E, T = _matrix(S_est), _matrix(S_true)
    if isinstance(S_est, SignatureSet) and isinstance(S_true, SignatureSet):
        if not S_est.grid.same_as(S_true.grid):
            raise ValueError("signature sets live on different grids")
    if E.shape != T.shape:
        raise ValueError(f"cannot align {E.shape[1]} estimated against {T.shape[1]} true signatures"
                         if E.shape[0] == T.shape[0] else f"band count mismatch: {E.shape[0]} vs {T.shape[0]}")
    q = T.shape[1]
    if q > MAX_ALIGN_Q:
        raise ValueError(f"exhaustive alignment supports q <= {MAX_ALIGN_Q}")
    # pairwise table: C[i, j] = SAM(true i, estimate j)
    C = np.array([[sam_degrees(T[:, i], E[:, j]) for j in range(q)] for i in range(q)])
    rows = np.arange(q)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(q)):
        cost = C[rows, perm].sum()
        if cost < best_cost - 1e-12:
            best, best_cost = perm, cost
    sam = C[rows, best]
    err = np.array([rmse(T[:, i], E[:, best[i]]) for i in range(q)])
    labels = S_true.labels if isinstance(S_true, SignatureSet) else tuple(f"m{i + 1}" for i in range(q))
    return Alignment(tuple(int(p) for p in best), sam, err, tuple(labels))


def pca_project_2d(X, fit_on) -> np.ndarray:
    """Project all columns onto the top-2 principal plane of the ``fit_on`` columns."""
    M = np.asarray(X.X if isinstance(X, StandardizedData) else X, dtype=float)
    fit_on = np.asarray(fit_on)
    if fit_on.dtype == bool:
        fit_on = np.flatnonzero(fit_on)
    if fit_on.size < 3:
        raise ValueError("PCA projection needs at least 3 fit columns")
    F = M[:, fit_on]
    mean = F.mean(axis=1)
    U, _, _ = np.linalg.svd(F - mean[:, None], full_matrices=False)
    P = U[:, :2]
    signs = np.sign(P[np.argmax(np.abs(P), axis=0), [0, 1]])
    P = P * np.where(signs == 0, 1.0, signs)
    return P.T @ (M - mean[:, None])
