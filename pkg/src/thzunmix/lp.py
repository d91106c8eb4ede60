"""Dense two-phase tableau simplex method.

Solves ``min c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0`` (variables
flagged in ``free`` are unrestricted).  Entering columns follow Dantzig's
rule with lowest-index tie breaking; leaving rows use a Harris two-pass ratio
test (largest pivot among near-minimal ratios, lowest basis index on ties).
A run of degenerate pivots switches both rules to pure Bland, which cannot
cycle.  The tableau is periodically rebuilt from the original data on the
current basis to keep rounding error from accumulating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPError", "LPInfeasible", "LPUnbounded", "LPResult", "lp_solve"]

_EPS = 1e-10
_DEGENERATE_SWITCH = 50
_REFACTOR_EVERY = 50
_HARRIS_DELTA = 1e-10


class LPError(RuntimeError):
    pass


class LPInfeasible(LPError):
    pass


class LPUnbounded(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    dual_ub: np.ndarray
    dual_eq: np.ndarray
    gap: float
    dual_residual: float
    iterations: int
    dual_objective: float = float("nan")
    primal_residual: float = 0.0


class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int]):
        m, n = A.shape
        self.A0 = A.copy()
        self.b0 = b.copy()
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = list(basis)
        self.cost = np.zeros(n)
        self.iterations = 0

    def keep(self, rows, n_cols: int):
        """Restrict to ``rows`` and the first ``n_cols`` columns."""
        self.A0 = self.A0[np.ix_(rows, np.arange(n_cols))]
        self.b0 = self.b0[rows]
        self.T = np.vstack([self.T[rows], self.T[-1:]])
        self.T = np.hstack([self.T[:, :n_cols], self.T[:, -1:]])
        self.basis = [self.basis[i] for i in rows]
        self.cost = self.cost[:n_cols]

    def refactor(self, exact: bool = False) -> bool:
        """Recompute the tableau as B^-1 [A | b] from the original data.

        Keeps the old tableau (and returns False) if the fresh basic solution
        is infeasible beyond rounding.  With ``exact`` the fresh values are
        kept as they are (slightly negative ones included) for a dual cleanup.
        """
        try:
            body = np.linalg.solve(self.A0[:, self.basis], np.hstack([self.A0, self.b0[:, None]]))
        except np.linalg.LinAlgError:
            return False
        if not exact:
            if np.any(body[:, -1] < -1e-9 * max(1.0, np.abs(self.b0).max(initial=0.0))):
                return False
            body[:, -1] = np.maximum(body[:, -1], 0.0)
        body[:, self.basis] = np.eye(len(self.basis))
        self.T = np.vstack([body, np.zeros((1, body.shape[1]))])
        self.set_cost(self.cost)
        return True

    def dual_cleanup(self, allowed: np.ndarray, max_iter: int = 200) -> None:
        """Dual simplex pivots removing rounding-level primal infeasibility.

        Run on a dual-feasible tableau; stops once every basic value is
        nonnegative up to ~1e-14 relative.
        """
        if not self.refactor(exact=True):
            return
        tol = 1e-14 * max(1.0, np.abs(self.b0).max(initial=0.0))
        for _ in range(max_iter):
            T = self.T
            r = int(np.argmin(T[:-1, -1]))
            if T[r, -1] >= -tol:
                return
            row = np.where(allowed, T[r, :-1], 0.0)
            cols = np.flatnonzero(row < -_EPS)
            if cols.size == 0:
                return
            ratios = np.maximum(T[-1, cols], 0.0) / -row[cols]
            e = int(cols[np.argmin(ratios)])
            self.pivot(r, e)
            self.refactor(exact=True)

    @property
    def m(self):
        return self.T.shape[0] - 1

    def set_cost(self, cost: np.ndarray):
        n = self.T.shape[1] - 1
        self.cost = np.array(cost, dtype=float)
        self.T[-1, :n] = cost
        self.T[-1, n] = 0.0
        for i, j in enumerate(self.basis):
            if self.T[-1, j] != 0.0:
                self.T[-1] -= self.T[-1, j] * self.T[i]

    def pivot(self, r: int, e: int):
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, e] = 0.0
        T[r, e] = 1.0
        self.basis[r] = e
        self.iterations += 1

    def run(self, allowed: np.ndarray, max_iter: int):
        T = self.T
        degenerate_run = 0
        scale = max(1.0, np.abs(T[-1, :-1]).max(initial=0.0))
        for it in range(max_iter):
            if it and it % _REFACTOR_EVERY == 0 and self.refactor():
                T = self.T
            rc = np.where(allowed, T[-1, :-1], 0.0)
            neg = np.flatnonzero(rc < -_EPS * scale)
            if neg.size == 0:
                return
            if degenerate_run >= _DEGENERATE_SWITCH:
                e = int(neg[0])
            else:
                e = int(neg[np.argmin(rc[neg])])
            colv = T[:-1, e]
            rows = np.flatnonzero(colv > _EPS)
            if rows.size == 0:
                raise LPUnbounded("objective is unbounded below")
            rhs = np.maximum(T[rows, -1], 0.0)
            ratios = rhs / colv[rows]
            best = ratios.min()
            if degenerate_run >= _DEGENERATE_SWITCH:
                tied = rows[ratios <= best + _EPS * max(1.0, abs(best))]
                r = int(min(tied, key=lambda i: self.basis[i]))
            else:
                # Harris two-pass test: among rows within the relaxed bound take
                # the largest pivot element (lowest basis index on ties)
                relaxed = ((rhs + _HARRIS_DELTA) / colv[rows]).min()
                cand = rows[ratios <= relaxed]
                piv = colv[cand]
                top = cand[piv >= piv.max() * (1 - 1e-12)]
                r = int(min(top, key=lambda i: self.basis[i]))
            degenerate_run = degenerate_run + 1 if best <= _EPS else 0
            self.pivot(r, e)
        raise LPError(f"simplex iteration cap {max_iter} reached")


def lp_solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None, max_iter: int = 50_000) -> LPResult:
    """Solve a small dense LP exactly (up to rounding) with a duality certificate.

    Returns the optimal basic solution together with the dual multipliers of
    the inequality (``<= 0`` by convention) and equality rows.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError("constraint shapes do not match the cost vector")
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)

    # split free variables x = x+ - x-
    free_idx = np.flatnonzero(free)
    expand = np.hstack([np.eye(n), -np.eye(n)[:, free_idx]])  # x = expand @ y
    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq
    ny = expand.shape[1]
    A = np.zeros((m, ny + m_ub))
    A[:m_ub, :ny] = A_ub @ expand
    A[:m_ub, ny:] = np.eye(m_ub)
    A[m_ub:, :ny] = A_eq @ expand
    b = np.concatenate([b_ub, b_eq])
    cost = np.concatenate([c @ expand, np.zeros(m_ub)])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    n_std = A.shape[1]

    # reuse unit columns (slacks etc.) as the starting basis, artificials elsewhere
    basis = [-1] * m
    used = set()
    nnz = (A != 0).sum(axis=0)
    for j in np.flatnonzero(nnz == 1):
        i = int(np.flatnonzero(A[:, j])[0])
        if basis[i] < 0 and A[i, j] == 1.0 and j not in used:
            basis[i] = int(j)
            used.add(int(j))
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    A_full = np.hstack([A, np.zeros((m, n_art))])
    for a, i in enumerate(art_rows):
        A_full[i, n_std + a] = 1.0
        basis[i] = n_std + a
    tab = _Tableau(A_full, b, basis)
    rows_kept = np.arange(m)

    if n_art:
        phase1 = np.zeros(n_std + n_art)
        phase1[n_std:] = 1.0
        tab.set_cost(phase1)
        tab.run(np.ones(n_std + n_art, dtype=bool), max_iter)
        infeas = -tab.T[-1, -1]
        if infeas > 1e-8 * max(1.0, np.abs(b).max(initial=0.0)):
            raise LPInfeasible(f"no feasible point (phase-1 residual {infeas:.3g})")
        # drive zero-level artificials out of the basis, drop redundant rows
        drop = []
        for i in range(tab.m):
            if tab.basis[i] >= n_std:
                cand = np.flatnonzero(np.abs(tab.T[i, :n_std]) > 1e-9)
                if cand.size:
                    tab.pivot(i, int(cand[0]))
                else:
                    drop.append(i)
        keep = [i for i in range(tab.m) if i not in drop]
        tab.keep(keep, n_std)
        rows_kept = rows_kept[keep]

    tab.set_cost(cost)
    allowed = np.ones(n_std, dtype=bool)
    tab.run(allowed, max_iter)
    for _ in range(3):
        tab.dual_cleanup(allowed)
        before = tab.iterations
        tab.run(allowed, max_iter)
        if tab.iterations == before:
            break

    # final basic solution from a fresh factorization of the optimal basis
    B = A[np.ix_(rows_kept, tab.basis)]
    try:
        xB = np.linalg.solve(B, b[rows_kept])
    except np.linalg.LinAlgError:
        xB = tab.T[:-1, -1]
    y_std = np.zeros(n_std)
    y_std[tab.basis] = np.maximum(xB, 0.0)
    x = expand @ y_std[:ny]

    # duals from B^T w = c_B on the kept rows
    w_kept = np.linalg.lstsq(B.T, cost[tab.basis], rcond=None)[0]
    w = np.zeros(m)
    w[rows_kept] = w_kept
    w *= sign
    dual_ub, dual_eq = w[:m_ub], w[m_ub:]
    objective = float(c @ x)
    dual_obj = float(b_ub @ dual_ub + b_eq @ dual_eq)
    reduced = c - A_ub.T @ dual_ub - A_eq.T @ dual_eq
    dual_res = float(max(
        np.maximum(-reduced[~free], 0.0).max(initial=0.0),
        np.abs(reduced[free]).max(initial=0.0),
        np.maximum(dual_ub, 0.0).max(initial=0.0),
    ))
    primal_res = float(max(
        np.maximum(A_ub @ x - b_ub, 0.0).max(initial=0.0),
        np.abs(A_eq @ x - b_eq).max(initial=0.0),
    ))
    return LPResult(x, objective, dual_ub, dual_eq, abs(objective - dual_obj), dual_res,
                    tab.iterations, dual_obj, primal_res)
