"""Convex geometry in the reduced space R^p, p = q - 1 <= 5.

* H-representation of a point-set hull (Qhull for p <= 3, exhaustive facet
  enumeration for p in {4, 5}).
* The maximum-volume inscribed ellipsoid ``{F u + c : ||u|| <= 1}`` of an
  H-polytope, found by path-following damped Newton on the barrier
  ``-t log det F - sum_i log((h_i - b_i^T c)^2 - ||F b_i||^2)``.
* The unit-volume regular simplex and the scale that gives it unit inradius.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .lp import LPInfeasible, LPUnbounded, lp_solve

log = logging.getLogger(__name__)

__all__ = [
    "DegenerateGeometryError",
    "EmptyInteriorError",
    "LJEConvergenceError",
    "HPolytope",
    "Ellipsoid",
    "convex_hull_halfspaces",
    "enumerate_facets",
    "chebyshev_center",
    "lje",
    "unit_volume_regular_simplex",
    "simplex_scale_alpha",
    "precondition",
    "simplex_volume",
]

MAX_DIM = 5
MAX_POINTS = 500
DEGENERACY_TOL = 1e-9


class DegenerateGeometryError(ValueError):
    pass


class EmptyInteriorError(ValueError):
    pass


class LJEConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual


@dataclass(frozen=True)
class HPolytope:
    """Bounded polytope ``{x : B x <= h}`` with unit-norm rows of ``B``."""

    B: np.ndarray
    h: np.ndarray
    verify: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        B = np.atleast_2d(np.array(self.B, dtype=float))
        h = np.array(self.h, dtype=float).reshape(-1)
        if B.shape[0] != h.size or B.shape[0] == 0:
            raise ValueError("need a nonempty list of halfspaces with matching offsets")
        norms = np.linalg.norm(B, axis=1)
        if np.any(norms == 0):
            raise ValueError("halfspace normal must be nonzero")
        B = B / norms[:, None]
        h = h / norms
        B.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "h", h)
        if self.verify:
            self._check_bounded()

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    @property
    def halfspaces(self) -> list[tuple[np.ndarray, float]]:
        return [(b, float(hi)) for b, hi in zip(self.B, self.h)]

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all(x @ self.B.T <= self.h + tol, axis=1)

    def _check_bounded(self):
        p = self.dim
        for j in range(p):
            for sgn in (1.0, -1.0):
                cost = np.zeros(p)
                cost[j] = -sgn
                try:
                    lp_solve(cost, A_ub=self.B, b_ub=self.h, free=np.ones(p, dtype=bool))
                except LPUnbounded:
                    raise ValueError(f"polytope is unbounded along {'+' if sgn > 0 else '-'}e_{j}") from None
                except LPInfeasible:
                    raise ValueError("polytope is empty") from None


@dataclass(frozen=True)
class Ellipsoid:
    """``{F u + c : ||u|| <= 1}`` with ``F`` symmetric positive definite."""

    F: np.ndarray
    c: np.ndarray
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        c = np.array(self.c, dtype=float).reshape(-1)
        if F.shape != (c.size, c.size):
            raise ValueError("F must be p x p with p = len(c)")
        if np.abs(F - F.T).max() > 1e-12 * max(1.0, np.abs(F).max()):
            raise ValueError("F must be symmetric")
        F = 0.5 * (F + F.T)
        if np.linalg.eigvalsh(F).min() <= 0:
            raise ValueError("F must be positive definite")
        F.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def log_det(self) -> float:
        return float(np.linalg.slogdet(self.F)[1])

    def volume(self) -> float:
        p = self.dim
        unit_ball = math.pi ** (p / 2) / math.gamma(p / 2 + 1)
        return unit_ball * float(np.linalg.det(self.F))


# ---------------------------------------------------------------------------
# hulls

def _as_points(points) -> np.ndarray:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.ndim != 2:
        raise ValueError("points must be a 2-D array of shape (n_points, p)")
    return P


def _check_affine_rank(P: np.ndarray):
    n, p = P.shape
    if p < 1 or p > MAX_DIM:
        raise DegenerateGeometryError(f"dimension p={p} outside the supported range 1..{MAX_DIM}")
    if n > MAX_POINTS:
        raise DegenerateGeometryError(f"{n} points exceed the supported limit of {MAX_POINTS}")
    if n < p + 1:
        raise DegenerateGeometryError(f"need at least p+1={p + 1} points in dimension {p}, got {n}")
    sv = np.linalg.svd(P - P.mean(axis=0), compute_uv=False)
    if sv[0] == 0 or sv[p - 1] <= DEGENERACY_TOL * sv[0]:
        raise DegenerateGeometryError(
            f"points are affinely dependent in dimension {p} "
            f"(relative singular value {sv[p - 1] / max(sv[0], 1e-300):.2e}); try a smaller q"
        )


def _dedupe(B: np.ndarray, h: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    keep_B, keep_h = [], []
    for b, hi in zip(B, h):
        if keep_B:
            KB = np.array(keep_B)
            close = (np.abs(KB - b).max(axis=1) < 1e-7) & (np.abs(np.array(keep_h) - hi) < 1e-7 * scale)
            if close.any():
                continue
        keep_B.append(b)
        keep_h.append(hi)
    order = np.lexsort(np.column_stack([keep_h, np.array(keep_B)]).T[::-1])
    return np.array(keep_B)[order], np.array(keep_h)[order]


def enumerate_facets(points, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """All supporting hyperplanes through p affinely independent points.

    Brute force over every p-subset; a hyperplane is kept when every point
    lies on one side of it.  Returns unit normals ``B`` and offsets ``h`` with
    ``B x <= h`` on the hull.
    """
    P = _as_points(points)
    n, p = P.shape
    scale = max(1.0, np.abs(P).max())
    atol = tol * scale
    if p == 1:
        return np.array([[1.0], [-1.0]]), np.array([P.max(), -P.min()])
    found_B, found_h = [], []
    combos = np.array(list(itertools.combinations(range(n), p)), dtype=int)
    for start in range(0, len(combos), 20000):
        sub = combos[start:start + 20000]
        base = P[sub[:, 0]]
        D = P[sub[:, 1:]] - base[:, None, :]
        _, sv, Vt = np.linalg.svd(D, full_matrices=True)
        ok = sv[:, -1] > 1e-12 * scale if p > 2 else np.linalg.norm(D[:, 0], axis=1) > 1e-12 * scale
        normal = Vt[:, -1, :]
        off = np.einsum("ij,ij->i", normal, base)
        vals = P @ normal.T - off  # n x subsets
        below = np.all(vals <= atol, axis=0) & ok
        above = np.all(vals >= -atol, axis=0) & ok
        found_B.extend(normal[below])
        found_h.extend(off[below])
        found_B.extend(-normal[above])
        found_h.extend(-off[above])
    if not found_B:
        raise DegenerateGeometryError("no supporting facets found")
    return _dedupe(np.array(found_B), np.array(found_h), scale)


def convex_hull_halfspaces(points, method: str = "auto") -> HPolytope:
    """Facet halfspaces of ``conv(points)``; ``points`` has shape (n, p)."""
    P = _as_points(points)
    _check_affine_rank(P)
    p = P.shape[1]
    scale = max(1.0, np.abs(P).max())
    if method == "auto":
        method = "qhull" if 2 <= p <= 3 else "enumerate"
    if p == 1 or method == "enumerate":
        B, h = enumerate_facets(P)
    elif method == "qhull":
        hull = ConvexHull(P)
        eq = hull.equations
        B, h = _dedupe(eq[:, :p], -eq[:, p], scale)
    else:
        raise ValueError(f"unknown hull method {method!r}")
    return HPolytope(B, h, verify=False)


# ---------------------------------------------------------------------------
# Loewner-John ellipsoid

def chebyshev_center(poly: HPolytope) -> tuple[np.ndarray, float]:
    """Center and radius of the largest ball inside the polytope (one LP)."""
    p = poly.dim
    A = np.hstack([poly.B, np.ones((poly.B.shape[0], 1))])
    cost = np.zeros(p + 1)
    cost[-1] = -1.0
    free = np.ones(p + 1, dtype=bool)
    free[-1] = False
    res = lp_solve(cost, A_ub=A, b_ub=poly.h, free=free)
    return res.x[:p], float(res.x[-1])


def _sym_basis(p: int) -> np.ndarray:
    mats = []
    for a in range(p):
        for b in range(a, p):
            E = np.zeros((p, p))
            E[a, b] = E[b, a] = 1.0
            mats.append(E)
    return np.array(mats)


class _LJEBarrier:
    def __init__(self, poly: HPolytope):
        self.B = poly.B
        self.h = poly.h
        self.p = poly.dim
        self.G = _sym_basis(self.p)
        self.m = len(self.G)
        # M[i, a, k] = (E_k b_i)_a
        self.M = np.einsum("kab,ib->iak", self.G, self.B)

    def unpack(self, z):
        return np.einsum("k,kab->ab", z[: self.m], self.G), z[self.m:]

    def pack(self, F, c):
        iu = np.triu_indices(self.p)
        return np.concatenate([F[iu], c])

    def value(self, z, t):
        F, c = self.unpack(z)
        try:
            L = np.linalg.cholesky(F)
        except np.linalg.LinAlgError:
            return np.inf
        s = self.h - self.B @ c
        g = s * s - np.sum((self.B @ F) ** 2, axis=1)
        if np.any(s <= 0) or np.any(g <= 0):
            return np.inf
        return -t * 2.0 * np.sum(np.log(np.diag(L))) - np.sum(np.log(g))

    def derivatives(self, z, t):
        F, c = self.unpack(z)
        m = self.m
        s = self.h - self.B @ c
        U = self.B @ F
        g = s * s - np.sum(U * U, axis=1)
        Finv = np.linalg.inv(F)
        W = np.einsum("ab,kbc->kac", Finv, self.G)
        grad = np.zeros(m + self.p)
        hess = np.zeros((m + self.p, m + self.p))
        grad[:m] = -t * np.einsum("kaa->k", W)
        hess[:m, :m] = t * np.einsum("kab,lba->kl", W, W)
        Dg = np.hstack([-2.0 * np.einsum("iak,ia->ik", self.M, U), -2.0 * s[:, None] * self.B])
        grad -= np.sum(Dg / g[:, None], axis=0)
        hess += np.einsum("ij,ik->jk", Dg / g[:, None], Dg / g[:, None])
        # second derivative of g: FF block -2 M^T M, cc block 2 b b^T
        hess[:m, :m] += 2.0 * np.einsum("iak,ial,i->kl", self.M, self.M, 1.0 / g)
        hess[m:, m:] -= 2.0 * np.einsum("ia,ib,i->ab", self.B, self.B, 1.0 / g)
        return grad, hess


def lje(poly: HPolytope, tol: float = 1e-8, max_iter: int = 200, mu: float = 10.0) -> Ellipsoid:
    """Maximum-volume ellipsoid inscribed in ``poly``.

    Maximizes ``log det F`` subject to ``||F b_i|| <= h_i - b_i^T c``.  The
    barrier parameter is raised until the duality-gap bound ``2 H / t``
    drops below ``tol``; ``max_iter`` caps the total Newton steps.
    """
    c0, radius = chebyshev_center(poly)
    if radius <= 1e-12 * max(1.0, np.abs(poly.h).max()):
        raise EmptyInteriorError(f"polytope has no interior (Chebyshev radius {radius:.3g})")
    bar = _LJEBarrier(poly)
    n_facets = poly.B.shape[0]
    z = bar.pack(0.5 * radius * np.eye(poly.dim), c0)
    t = 1.0
    iters = 0
    decrement = np.inf
    while True:
        while True:
            f = bar.value(z, t)
            grad, hess = bar.derivatives(z, t)
            try:
                step = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            decrement = float(-grad @ step)
            # objective error of an inexact center is ~ decrement / t
            if decrement / 2.0 <= 1e-7:
                break
            if iters >= max_iter:
                raise LJEConvergenceError(f"LJE Newton did not converge in {max_iter} iterations", decrement)
            alpha = 1.0
            slope = grad @ step
            while bar.value(z + alpha * step, t) > f + 0.25 * alpha * slope:
                alpha *= 0.5
                if alpha < 1e-6:
                    break
            iters += 1
            if alpha < 1e-6:
                # no representable decrease left: centered to working precision
                if decrement > 1e-6:
                    raise LJEConvergenceError("LJE line search stalled", decrement)
                break
            z = z + alpha * step
        gap = 2.0 * n_facets / t
        if gap < tol:
            break
        t *= mu
    F, c = bar.unpack(z)
    F = 0.5 * (F + F.T)
    info = {"iterations": iters, "gap": gap, "newton_decrement": decrement, "t": t}
    log.debug("LJE converged: %s", info)
    return Ellipsoid(F, c, info)


def ellipsoid_slack(poly: HPolytope, E: Ellipsoid) -> np.ndarray:
    """``h_i - b_i^T c - ||F b_i||``; nonnegative iff E lies inside the polytope."""
    return poly.h - poly.B @ E.c - np.linalg.norm(poly.B @ E.F, axis=1)


# ---------------------------------------------------------------------------
# regular simplex

def _helmert(q: int) -> np.ndarray:
    """q x (q-1) orthonormal basis of the complement of the all-ones vector."""
    Q = np.zeros((q, q - 1))
    for j in range(1, q):
        Q[:j, j - 1] = 1.0
        Q[j, j - 1] = -j
        Q[:, j - 1] /= math.sqrt(j * (j + 1))
    return -Q


def simplex_volume(V: np.ndarray) -> float:
    """(p)-volume of the simplex with the p+1 columns of ``V`` (p x (p+1))."""
    V = np.asarray(V, dtype=float)
    p = V.shape[0]
    D = V[:, 1:] - V[:, :1]
    return abs(float(np.linalg.det(D))) / math.factorial(p)


def unit_volume_regular_simplex(q: int) -> np.ndarray:
    """(q-1) x q vertex matrix of a unit-volume regular simplex centered at 0."""
    if q < 2:
        raise ValueError("q must be at least 2")
    n = q - 1
    S = _helmert(q).T  # edge length sqrt(2)
    vol = math.sqrt(n + 1) / math.factorial(n)
    return S * vol ** (-1.0 / n)


def simplex_scale_alpha(q: int) -> float:
    """Scale turning the unit-volume regular simplex into one of inradius 1."""
    if q < 2:
        raise ValueError("q must be at least 2")
    n = q - 1
    edge = math.sqrt(2.0) * (math.sqrt(n + 1) / math.factorial(n)) ** (-1.0 / n)
    inradius = edge / math.sqrt(2.0 * n * (n + 1))
    return 1.0 / inradius


def precondition(V, E: Ellipsoid) -> np.ndarray:
    """``F^{-1} (v - c)`` applied to a vector or to each column of a matrix."""
    V = np.asarray(V, dtype=float)
    if V.shape[0] != E.dim:
        raise ValueError(f"expected leading dimension {E.dim}, got {V.shape[0]}")
    if V.ndim == 1:
        return np.linalg.solve(E.F, V - E.c)
    return np.linalg.solve(E.F, V - E.c[:, None])
