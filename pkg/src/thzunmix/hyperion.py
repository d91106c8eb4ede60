"""Blind unmixing by ellipsoidal preconditioning and soft regular-simplex fitting.

Pipeline: affine fit to ``q - 1`` dimensions, hull, maximum-volume inscribed
ellipsoid, preconditioning ``C(v) = F^{-1}(v - c)``, then block-coordinate
descent on

    ||C(X) - S T||_F^2 + lam * ||S - a U^T S0||_F^2

over the preconditioned signatures ``S``, column-stochastic abundances ``T``
and orthogonal ``U`` (``S0`` unit-volume regular simplex, ``a`` the scale
giving it unit inradius).  Signatures map back via ``mean + basis (F s + c)``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .core import AbundanceMatrix, SignatureSet, StandardizedData
from .geometry import (
    Ellipsoid,
    convex_hull_halfspaces,
    lje,
    precondition,
    simplex_scale_alpha,
    unit_volume_regular_simplex,
)
from .preprocess import affine_fit

log = logging.getLogger(__name__)

__all__ = [
    "HyperionConfig",
    "HyperionResult",
    "hyperion_unmix",
    "fcls",
    "update_S",
    "update_T",
    "update_U",
    "recover_signatures",
    "regularizer_value",
    "hyperion_objective",
]


@dataclass(frozen=True)
class HyperionConfig:
    q: int
    lam: float = 1.0
    max_iters: int = 500
    rel_tol: float = 1e-8
    seed: int = 0
    restarts: int = 0
    lje_tol: float = 1e-8

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("q must be at least 2")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.restarts < 0:
            raise ValueError("restarts must be nonnegative")


@dataclass
class HyperionResult:
    signatures: SignatureSet
    abundances: AbundanceMatrix
    S_tilde: np.ndarray
    U: np.ndarray
    objective_trace: list[float]
    ellipsoid: Ellipsoid
    preconditioned: np.ndarray = field(repr=False)
    rejected_steps: int = 0
    iterations: int = 0


# ---------------------------------------------------------------------------
# block subproblems

_SUPPORT_CACHE: dict[int, list[tuple[int, ...]]] = {}


def _supports(q: int) -> list[tuple[int, ...]]:
    if q not in _SUPPORT_CACHE:
        _SUPPORT_CACHE[q] = [J for r in range(1, q + 1) for J in itertools.combinations(range(q), r)]
    return _SUPPORT_CACHE[q]


def fcls(S: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Fully constrained least squares for every column of ``Y``.

    Solves ``min ||y - S t||^2  s.t.  t >= 0, sum(t) = 1`` exactly by checking
    the sum-to-one least-squares solution on every support; the convex
    problem's minimizer is the best feasible one.  Intended for q <= 8.
    """
    S = np.asarray(S, dtype=float)
    Y = np.asarray(Y, dtype=float)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    q = S.shape[1]
    ell = Y.shape[1]
    best_obj = np.full(ell, np.inf)
    best_T = np.zeros((q, ell))
    scale = max(1.0, float(np.abs(S).max()), float(np.abs(Y).max()))
    for J in _supports(q):
        SJ = S[:, J]
        j = len(J)
        K = np.zeros((j + 1, j + 1))
        K[:j, :j] = SJ.T @ SJ
        K[:j, j] = 1.0
        K[j, :j] = 1.0
        rhs = np.vstack([SJ.T @ Y, np.ones((1, ell))])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        tJ = sol[:j]
        feasible = np.all(tJ >= -1e-12, axis=0) & (np.abs(tJ.sum(axis=0) - 1.0) < 1e-9)
        if not feasible.any():
            continue
        tJ = np.maximum(tJ, 0.0)
        tJ /= tJ.sum(axis=0)
        obj = np.sum((Y - SJ @ tJ) ** 2, axis=0)
        better = feasible & (obj < best_obj - 1e-15 * scale * scale)
        if better.any():
            best_obj[better] = obj[better]
            best_T[:, better] = 0.0
            best_T[np.ix_(J, np.flatnonzero(better))] = tJ[:, better]
    return best_T[:, 0] if squeeze else best_T


def update_T(CX: np.ndarray, S_tilde: np.ndarray) -> np.ndarray:
    return fcls(S_tilde, CX)


def update_S(CX, T_tilde, U, alpha, S0, lam) -> np.ndarray:
    """Closed-form minimizer of the signature subproblem."""
    q = T_tilde.shape[0]
    G = T_tilde @ T_tilde.T + lam * np.eye(q)
    R = CX @ T_tilde.T + lam * alpha * (U.T @ S0)
    try:
        # S G = R with G symmetric
        return np.linalg.solve(G, R.T).T
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            "singular T T^T + lambda I: lambda = 0 with rank-deficient abundances"
        ) from None


def update_U(S_tilde: np.ndarray, S0: np.ndarray) -> np.ndarray:
    """Orthogonal U maximizing trace(U S S0^T) (orthogonal Procrustes)."""
    W, _, Vt = np.linalg.svd(S_tilde @ S0.T)
    return Vt.T @ W.T


def regularizer_value(S_tilde, U, alpha, S0) -> float:
    return float(np.sum((S_tilde - alpha * U.T @ S0) ** 2))


def hyperion_objective(CX, S_tilde, T_tilde, U, alpha, S0, lam) -> float:
    fit = float(np.sum((CX - S_tilde @ T_tilde) ** 2))
    return fit + lam * regularizer_value(S_tilde, U, alpha, S0)


def recover_signatures(S_tilde, E: Ellipsoid, mean, basis, grid=None, labels=()):
    """Map preconditioned signatures back to absorption spectra.

    Returns a :class:`SignatureSet` when ``grid`` is given, otherwise the raw
    k x q matrix.
    """
    S = mean[:, None] + basis @ (E.F @ S_tilde + E.c[:, None])
    if grid is None:
        return S
    return SignatureSet(grid, S, tuple(labels))


# ---------------------------------------------------------------------------

def _random_orthogonal(rng: np.random.Generator, p: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    return Q * np.sign(np.diag(R))


def _alternate(CX, U0, alpha, S0, cfg: HyperionConfig):
    lam = cfg.lam
    scale = max(float(np.sum(CX * CX)), 1e-300)
    U = U0
    S = alpha * (U.T @ S0)
    T = update_T(CX, S)
    obj = hyperion_objective(CX, S, T, U, alpha, S0, lam)
    trace = [obj]
    rejected = 0
    # steps are accepted up to rounding noise; the trace records the true value
    slack = 1e-12 * scale
    it = 0
    for it in range(1, cfg.max_iters + 1):
        prev = obj
        S_new = update_S(CX, T, U, alpha, S0, lam)
        o = hyperion_objective(CX, S_new, T, U, alpha, S0, lam)
        if o <= obj + slack:
            S, obj = S_new, o
        else:
            rejected += 1
            log.warning("rejected S update at iteration %d (objective %.3g -> %.3g)", it, obj, o)
        T_new = update_T(CX, S)
        o = hyperion_objective(CX, S, T_new, U, alpha, S0, lam)
        if o <= obj + slack:
            T, obj = T_new, o
        else:
            rejected += 1
            log.warning("rejected T update at iteration %d (objective %.3g -> %.3g)", it, obj, o)
        U_new = update_U(S, S0)
        o = hyperion_objective(CX, S, T, U_new, alpha, S0, lam)
        if o <= obj + slack:
            U, obj = U_new, o
        else:
            rejected += 1
            log.warning("rejected U update at iteration %d (objective %.3g -> %.3g)", it, obj, o)
        trace.append(obj)
        if prev - obj <= cfg.rel_tol * max(prev, 1e-14 * scale):
            break
    return S, T, U, trace, rejected, it


def hyperion_unmix(X: StandardizedData, cfg: HyperionConfig) -> HyperionResult:
    """Blindly recover ``cfg.q`` signatures and abundances from standardized data."""
    q = cfg.q
    ell = X.n_samples
    if ell < q:
        raise ValueError(f"HYPERION with q={q} needs at least {q} samples, got {ell}")
    fit = affine_fit(X, q)
    poly = convex_hull_halfspaces(fit.projected.T)
    E = lje(poly, tol=cfg.lje_tol)
    CX = precondition(fit.projected, E)

    S0 = unit_volume_regular_simplex(q)
    alpha = simplex_scale_alpha(q)
    p = q - 1
    starts = [np.eye(p)]
    rng = np.random.default_rng(cfg.seed)
    starts += [_random_orthogonal(rng, p) for _ in range(cfg.restarts)]

    best = None
    for U0 in starts:
        run = _alternate(CX, U0, alpha, S0, cfg)
        if best is None or run[3][-1] < best[3][-1]:
            best = run
    S, T, U, trace, rejected, iters = best

    labels = tuple(f"m{i + 1}" for i in range(q))
    signatures = recover_signatures(S, E, fit.mean, fit.basis, X.grid, labels)
    abundances = AbundanceMatrix(T, labels, X.labels)
    return HyperionResult(
        signatures=signatures,
        abundances=abundances,
        S_tilde=S,
        U=U,
        objective_trace=trace,
        ellipsoid=E,
        preconditioned=CX,
        rejected_steps=rejected,
        iterations=iters,
    )
