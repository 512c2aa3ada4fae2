"""Integer linear program for the abstention-aware pre-image.

Variables are the predict bits ``h``, the reject bits ``r`` and one
interaction variable ``c[j, k]`` standing for ``h[j] * r[k]`` for every pair
the loss or the prediction-space rows refer to.  The product is enforced by
the three usual inequalities ``c <= h_j``, ``c <= r_k``,
``c >= h_j + r_k - 1``, which are exact on binary points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import CapExceeded
from ..hexgraph import AbstainedPrediction, HexGraph, PredictionSpace
from ..losses import LossSpec, psi_a_batch


@dataclass(frozen=True, eq=False)
class IlpInstance:
    """``min objective @ x + constant`` s.t. ``A x <= b``, ``lb <= x <= ub``, h and r binary."""

    objective: np.ndarray
    constant: float
    A: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    d: int
    pairs: tuple
    space: PredictionSpace

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def h_slice(self) -> slice:
        return slice(0, self.d)

    @property
    def r_slice(self) -> slice:
        return slice(self.d, 2 * self.d)

    @property
    def binary_vars(self) -> np.ndarray:
        return np.arange(2 * self.d)

    def names(self) -> list:
        return ([f"h{j}" for j in range(self.d)] + [f"r{k}" for k in range(self.d)]
                + [f"c{j}_{k}" for j, k in self.pairs])

    def lift(self, y_h, y_r) -> np.ndarray:
        """Full variable vector for a binary ``(h, r)`` pair."""
        h = np.asarray(y_h, dtype=float)
        r = np.asarray(y_r, dtype=float)
        c = np.array([h[j] * r[k] for j, k in self.pairs])
        return np.concatenate([h, r, c])

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if (x < self.lb - tol).any() or (x > self.ub + tol).any():
            return False
        return bool((self.A @ x <= self.b + tol).all())

    def value(self, x) -> float:
        return float(self.objective @ x + self.constant)

    def to_lp_format(self) -> str:
        """CPLEX LP text, for cross-checking with an external solver."""
        names = self.names()

        def expr(coefs):
            parts = []
            for k in np.flatnonzero(coefs):
                v = coefs[k]
                parts.append(f"{'-' if v < 0 else '+'} {abs(v):.17g} {names[k]}")
            return " ".join(parts) if parts else "0 " + names[0]

        lines = [f"\\ constant term: {self.constant:.17g}", "Minimize", f" obj: {expr(self.objective)}",
                 "Subject To"]
        for i, (row, rhs) in enumerate(zip(self.A, self.b)):
            lines.append(f" r{i}: {expr(row)} <= {rhs:.17g}")
        lines.append("Bounds")
        for name, lo, hi in zip(names, self.lb, self.ub):
            lines.append(f" {lo:.17g} <= {name} <= {hi:.17g}")
        lines.append("Binary")
        lines.append(" " + " ".join(names[:2 * self.d]))
        lines.append("End")
        return "\n".join(lines) + "\n"


def _space(spec: LossSpec, space) -> PredictionSpace:
    if space is None:
        return spec.prediction_space()
    if isinstance(space, HexGraph):
        if space != spec.graph:
            raise ValueError("graph does not match the loss")
        return spec.prediction_space()
    if space.graph != spec.graph:
        raise ValueError("prediction space graph does not match the loss")
    return space


def _pairs(spec: LossSpec, space: PredictionSpace) -> tuple:
    d = spec.d
    used = set()
    cols = np.flatnonzero(np.abs(spec.M[:, 2 * d:]).sum(axis=0) > 0)
    for col in cols:
        used.add((int(col // d), int(col % d)))
    if not space.strict:
        for p, i in space.graph.edges():
            used.add((i, p))
            used.add((p, p))
    return tuple(sorted(used))


def build_ilp(spec: LossSpec, space, psi_x) -> IlpInstance:
    """Linear program whose binary solutions are the decodings of ``psi_x``.

    The objective is ``<psi_x, C psi_a(h, r)>`` with ``psi_a`` expanded
    through its affine interaction form.  A product ``h_j r_k`` whose reject
    bit is fixed to 1 is replaced by ``h_j`` instead of getting a variable.
    """
    space = _space(spec, space)
    psi_x = np.asarray(psi_x, dtype=float)
    if psi_x.shape != (spec.q,):
        raise ValueError(f"psi_x must have length {spec.q}, got shape {psi_x.shape}")
    if not np.isfinite(psi_x).all():
        raise ValueError("psi_x must be finite")
    d = spec.d
    w = spec.C.T @ psi_x
    stack_cost = spec.M.T @ w
    constant = float(w @ spec.offset)
    forced = set(space.forced_predict)
    referenced = _pairs(spec, space)
    pairs = tuple(pq for pq in referenced if pq[1] not in forced)
    index = {pq: 2 * d + k for k, pq in enumerate(pairs)}
    for j, k in referenced:
        if k in forced:
            index[(j, k)] = j
    n = 2 * d + len(pairs)

    objective = np.zeros(n)
    objective[:2 * d] = stack_cost[:2 * d]
    for (j, k), v in index.items():
        objective[v] += stack_cost[2 * d + j * d + k]
    rows, rhs = [], []

    def add(coefs, bound):
        row = np.zeros(n)
        for var, v in coefs:
            row[var] += v
        rows.append(row)
        rhs.append(bound)

    for k, (j, kk) in enumerate(pairs):
        v = 2 * d + k
        add([(v, 1), (j, -1)], 0.0)
        add([(v, 1), (d + kk, -1)], 0.0)
        add([(j, 1), (d + kk, 1), (v, -1)], 1.0)
    for p, i in space.graph.edges():
        if space.strict:
            add([(i, 1), (p, -1)], 0.0)
        else:
            add([(index[(i, p)], 1), (index[(p, p)], -1)], 0.0)
        if space.consecutive == "purpose":
            if i not in forced and p not in forced:
                add([(d + i, -1), (d + p, -1)], -1.0)
        else:
            add([(d + i, 1), (d + p, 1)], 1.0)

    lb = np.zeros(n)
    ub = np.ones(n)
    for k in forced:
        lb[d + k] = 1.0
    A = np.array(rows).reshape(len(rows), n)
    return IlpInstance(objective, constant, A, np.array(rhs, dtype=float), lb, ub, d, pairs, space)


def brute_force_decode(spec: LossSpec, space, psi_x, cap: int = 10):
    """Exact minimizer by enumeration; ties go to the lexicographically first ``(h, r)``.

    Returns ``(AbstainedPrediction, objective_value)``.
    """
    space = _space(spec, space)
    if space.d > cap:
        raise CapExceeded(f"d={space.d} exceeds brute-force cap {cap}")
    psi_x = np.asarray(psi_x, dtype=float)
    H, R = space.enumerate(cap=cap)
    scores = psi_a_batch(spec, H, R) @ (spec.C.T @ psi_x)
    best = scores.min()
    k = int(np.flatnonzero(scores <= best + 1e-12)[0])
    return AbstainedPrediction(tuple(H[k]), tuple(R[k])), float(scores[k])
