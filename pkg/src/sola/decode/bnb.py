"""LP-based branch-and-bound over the predict and reject bits."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
import numpy as np

from ..exceptions import InfeasibleError
from ..hexgraph import AbstainedPrediction
from .ilp import IlpInstance, build_ilp
from .simplex import solve_lp

INT_TOL = 1e-7
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class BnbReport:
    optimum: AbstainedPrediction
    objective_value: float
    nodes_explored: int
    lp_integral_at_root: bool
    warm_start_used: bool
    lp_iterations: int = 0

    @property
    def branch_nodes(self) -> int:
        """Nodes solved beyond the root relaxation."""
        return self.nodes_explored - 1


def solve_lp_relaxation(ilp: IlpInstance, lb=None, ub=None):
    """Relaxed optimum with all variables in their boxes.

    Returns ``(x, lower_bound)``; raises :class:`InfeasibleError` when the
    box-restricted polytope is empty.
    """
    lb = ilp.lb if lb is None else lb
    ub = ilp.ub if ub is None else ub
    res = solve_lp(ilp.objective, ilp.A, ilp.b, lb, ub)
    return res.x, res.fun + ilp.constant


def _fractional(x, idx):
    vals = x[idx]
    return np.abs(vals - np.round(vals))


def _key(x_bin):
    return tuple(int(v) for v in x_bin)


def branch_and_bound(ilp: IlpInstance, warm_start=None, node_switch: int = 10_000) -> BnbReport:
    """Exact minimizer of the ILP.

    Depth-first search with most-fractional branching (lowest index on ties),
    switching to best-bound order after ``node_switch`` nodes.  ``warm_start``
    is an optional feasible ``(y_h, y_r)`` pair used as the first incumbent.
    Among equal-objective incumbents the lexicographically smaller ``(h, r)``
    is kept.
    """
    bins = ilp.binary_vars
    best_x, best_val = None, np.inf
    warm_used = False
    if warm_start is not None:
        y_h, y_r = warm_start
        x0 = ilp.lift(y_h, y_r)
        if not ilp.is_feasible(x0):
            raise ValueError("warm start is not feasible for this instance")
        best_x, best_val = x0, ilp.value(x0)
        warm_used = True

    def offer(x_int):
        nonlocal best_x, best_val
        val = ilp.value(x_int)
        if val < best_val - BOUND_TOL or (
                val <= best_val + BOUND_TOL and _key(x_int[bins]) < _key(best_x[bins])):
            best_x, best_val = x_int, val

    nodes = 0
    lp_iters = 0
    root_integral = False
    seq = 0
    stack = [(ilp.lb.copy(), ilp.ub.copy())]
    heap = []
    while stack or heap:
        if stack:
            lb, ub = stack.pop()
        else:
            _, _, lb, ub = heapq.heappop(heap)
        try:
            res = solve_lp(ilp.objective, ilp.A, ilp.b, lb, ub)
        except InfeasibleError:
            if nodes == 0:
                raise
            nodes += 1
            continue
        nodes += 1
        lp_iters += res.iterations
        bound = res.fun + ilp.constant
        frac = _fractional(res.x, bins)
        integral = bool((frac <= INT_TOL).all())
        if nodes == 1:
            root_integral = integral
        if integral:
            hr = np.round(res.x[bins])
            offer(ilp.lift(hr[:ilp.d], hr[ilp.d:]))
            continue
        if bound >= best_val - BOUND_TOL:
            continue
        j = int(bins[np.argmax(frac)])
        down_ub = ub.copy()
        down_ub[j] = 0.0
        up_lb = lb.copy()
        up_lb[j] = 1.0
        children = [(up_lb, ub), (lb, down_ub)]
        if res.x[j] >= 0.5:
            children.reverse()
        if nodes < node_switch:
            # last pushed is explored first
            stack.extend(children)
            continue
        for child_lb, child_ub in stack + children:
            seq += 1
            heapq.heappush(heap, (bound, seq, child_lb, child_ub))
        stack = []

    if best_x is None:
        raise InfeasibleError("no feasible binary point")
    opt = AbstainedPrediction(tuple(best_x[ilp.h_slice].astype(int)),
                              tuple(best_x[ilp.r_slice].astype(int)))
    return BnbReport(opt, best_val, nodes, root_integral, warm_used, lp_iters)


def decode_features(spec, space, psi_x, warm_start: bool = True) -> BnbReport:
    """Decode one feature vector, warm-started from the abstention-free solution."""
    ilp = build_ilp(spec, space, psi_x)
    start = None
    if warm_start and ilp.space.allows_abstention:
        try:
            plain = branch_and_bound(build_ilp(spec, ilp.space.without_abstention(), psi_x))
        except InfeasibleError:
            # the literal consecutive rule forbids predicting both ends of an edge
            plain = None
        if plain is not None:
            start = (plain.optimum.y_h, plain.optimum.y_r)
    return branch_and_bound(ilp, warm_start=start)


def decode(model, spec, space, x, warm_start: bool = True) -> AbstainedPrediction:
    """Predict ``(h, r)`` for one input with a fitted surrogate ``model``."""
    psi_x = model.predict(np.atleast_2d(np.asarray(x, dtype=float)))[0]
    return decode_features(spec, space, psi_x, warm_start).optimum
