"""Bounded-variable primal simplex on a dense tableau.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub`` and ``lb <= x <= ub``
with finite bounds on every structural variable.  Nonbasic variables sit at
one of their bounds; entering and leaving choices follow Bland's rule
(smallest index), which rules out cycling.  Phase 1 drives artificial
variables to zero for rows whose starting slack would be negative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import blas

from ..exceptions import InfeasibleError, UnboundedError

TOL = 1e-9


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    iterations: int


class _Tableau:
    def __init__(self, A, b, lb, ub):
        m, n = A.shape
        x0 = lb.copy()
        resid = b - A @ x0
        neg = np.flatnonzero(resid < -TOL)
        n_art = len(neg)
        sign = np.ones(m)
        sign[neg] = -1.0

        # columns: structural | slack | artificial
        T = np.zeros((m, n + m + n_art))
        T[:, :n] = A * sign[:, None]
        T[:, n:n + m] = np.diag(sign)
        T[neg, n + m + np.arange(n_art)] = 1.0
        self.T = T
        self.rhs = b * sign
        self.n, self.m, self.n_art = n, m, n_art
        self.lb = np.concatenate([lb, np.zeros(m + n_art)])
        self.ub = np.concatenate([ub, np.full(m, np.inf), np.full(n_art, np.inf)])
        self.x = np.concatenate([x0, np.zeros(m + n_art)])
        basis = n + np.arange(m)
        basis[neg] = n + m + np.arange(n_art)
        self.basis = basis
        self.is_basic = np.zeros(T.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self._refresh_basic_values()
        self.iterations = 0

    def _refresh_basic_values(self):
        nb = ~self.is_basic
        self.x[self.basis] = self.rhs - self.T[:, nb] @ self.x[nb]

    def run(self, cost, max_iter):
        cost = np.asarray(cost, dtype=float)
        dj = cost - cost[self.basis] @ self.T
        for _ in range(max_iter):
            j, direction = self._entering(dj)
            if j is None:
                self._refresh_basic_values()
                return
            self._step(j, direction, dj)
            self.iterations += 1
        raise RuntimeError("simplex iteration limit reached")

    def _entering(self, dj):
        at_lower = np.isclose(self.x, self.lb, atol=TOL, rtol=0)
        movable = (~self.is_basic) & (self.ub - self.lb > TOL)
        up = movable & at_lower & (dj < -TOL)
        down = movable & ~at_lower & (dj > TOL)
        cand = np.flatnonzero(up | down)
        if len(cand) == 0:
            return None, 0
        j = int(cand[0])
        return j, (1.0 if up[j] else -1.0)

    def _step(self, j, direction, dj):
        col = self.T[:, j] * direction
        xb = self.x[self.basis]
        lbb = self.lb[self.basis]
        ubb = self.ub[self.basis]
        ratios = np.full(self.m, np.inf)
        pos = col > TOL
        neg = col < -TOL
        ratios[pos] = (xb[pos] - lbb[pos]) / col[pos]
        ratios[neg] = (ubb[neg] - xb[neg]) / -col[neg]
        ratios = np.maximum(ratios, 0.0)
        flip = self.ub[j] - self.lb[j]
        t_row = ratios.min() if self.m else np.inf
        if not np.isfinite(t_row) and not np.isfinite(flip):
            raise UnboundedError("LP is unbounded")
        if flip <= t_row:
            self.x[j] = self.ub[j] if direction > 0 else self.lb[j]
            self.x[self.basis] = xb - flip * col
            return
        ties = np.flatnonzero(ratios <= t_row + TOL)
        r = int(ties[np.argmin(self.basis[ties])])
        leaving = self.basis[r]
        self.x[j] += direction * t_row
        self.x[self.basis] = xb - t_row * col
        self.x[leaving] = self.lb[leaving] if col[r] > 0 else self.ub[leaving]

        piv = self.T[r, j]
        self.T[r] /= piv
        self.rhs[r] /= piv
        factors = self.T[:, j].copy()
        factors[r] = 0.0
        pivot_row = self.T[r].copy()
        # in-place rank-1 update on the Fortran view of the C-ordered tableau
        blas.dger(-1.0, pivot_row, factors, a=self.T.T, overwrite_a=True)
        self.rhs -= factors * self.rhs[r]
        dj -= dj[j] * pivot_row
        self.basis[r] = j
        self.is_basic[j] = True
        self.is_basic[leaving] = False


def solve_lp(c, A_ub, b_ub, lb, ub, max_iter: int = 100_000) -> LPResult:
    """Minimize ``c @ x`` over ``A_ub x <= b_ub, lb <= x <= ub``.

    Raises :class:`InfeasibleError` when no point satisfies the constraints.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A_ub, dtype=float).reshape(-1, len(c))
    b = np.asarray(b_ub, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if (lb > ub + TOL).any():
        raise InfeasibleError("a variable has lower bound above its upper bound")
    if not (np.isfinite(lb).all() and np.isfinite(ub).all()):
        raise ValueError("structural variables need finite bounds")

    tab = _Tableau(A, b, lb, ub)
    n, m = tab.n, tab.m
    if tab.n_art:
        phase1 = np.zeros(tab.T.shape[1])
        phase1[n + m:] = 1.0
        tab.run(phase1, max_iter)
        if tab.x[n + m:].sum() > 1e-7:
            raise InfeasibleError("LP relaxation is infeasible")
        tab.ub[n + m:] = 0.0
        tab.x[n + m:] = 0.0
    full = np.zeros(tab.T.shape[1])
    full[:n] = c
    tab.run(full, max_iter)
    x = np.clip(tab.x[:n], lb, ub)
    return LPResult(x, float(c @ x), tab.iterations)
