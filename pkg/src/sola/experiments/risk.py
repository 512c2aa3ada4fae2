"""Exact check of the excess-risk bound on finite worlds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import CapExceeded
from ..hexgraph import enumerate_state_space
from ..losses import LossSpec, loss_direct, make_spec, psi_a_batch, psi_wa_batch

ENUM_CAP = 10


@dataclass(frozen=True)
class FiniteWorld:
    """A finite input set with marginal ``p_x`` and conditionals over legal labelings.

    ``labels`` has one legal labeling per row; ``cond[k, j]`` is
    ``P(y = labels[j] | x = k)``.
    """

    spec: LossSpec
    p_x: np.ndarray
    labels: np.ndarray
    cond: np.ndarray
    strict: bool = False
    abstain_nodes: tuple | None = None

    def __post_init__(self):
        p_x = np.asarray(self.p_x, dtype=float)
        cond = np.asarray(self.cond, dtype=float)
        if cond.shape != (len(p_x), len(self.labels)):
            raise ValueError("cond must have shape (|X|, |labels|)")
        if (p_x < 0).any() or not np.isclose(p_x.sum(), 1.0):
            raise ValueError("p_x must be a distribution")
        if (cond < 0).any() or not np.allclose(cond.sum(axis=1), 1.0):
            raise ValueError("each row of cond must be a distribution")
        object.__setattr__(self, "p_x", p_x)
        object.__setattr__(self, "cond", cond)

    @property
    def n_x(self) -> int:
        return len(self.p_x)

    def g_star(self) -> np.ndarray:
        """Conditional mean embedding ``E[psi_wa(y) | x]``, one row per input."""
        return self.cond @ psi_wa_batch(self.spec, self.labels)

    def actions(self):
        space = self.spec.prediction_space(strict=self.strict, abstain_nodes=self.abstain_nodes)
        if space.d > ENUM_CAP:
            raise CapExceeded(f"d={space.d} exceeds the enumeration cap {ENUM_CAP}")
        return space.enumerate(cap=ENUM_CAP)


def loss_table(spec: LossSpec, H, R, labels) -> np.ndarray:
    """``table[t, j] = loss(action t, labels[j])`` from the direct formulas."""
    return np.array([[loss_direct(spec, h, r, y) for y in labels] for h, r in zip(H, R)])


def c_l(spec: LossSpec, psi_actions: np.ndarray) -> float:
    """``||C||_2 * max ||psi_a||`` over the given action embeddings."""
    return float(np.linalg.norm(spec.C, 2) * np.linalg.norm(psi_actions, axis=1).max())


def surrogate_risk(world: FiniteWorld, G: np.ndarray) -> float:
    """``E ||g(x) - psi_wa(y)||^2`` by enumeration over ``(x, y)``."""
    Psi = psi_wa_batch(world.spec, world.labels)
    sq = ((G[:, None, :] - Psi[None, :, :]) ** 2).sum(axis=2)
    return float(world.p_x @ (world.cond * sq).sum(axis=1))


@dataclass(frozen=True)
class BoundCheck:
    excess_risk: float
    bound: float
    holds: bool
    surrogate_excess: float
    c_l: float


def risk_bound_check(world: FiniteWorld, g_estimate, tol: float = 1e-12,
                     table: np.ndarray | None = None) -> BoundCheck:
    """Compare the decoded excess risk with ``2 c_l sqrt(L(g_estimate) - L(g*))``.

    ``g_estimate`` is an ``(|X|, q)`` array or a callable mapping an input
    index to a length-``q`` vector.  Decoding and the Bayes action are both
    found by brute force over the prediction space, keeping the first
    minimizer in enumeration order.  Risks use the direct loss formulas;
    ``table`` may pass a precomputed :func:`loss_table` for the same world.
    """
    spec = world.spec
    if callable(g_estimate):
        G = np.vstack([np.asarray(g_estimate(k), dtype=float) for k in range(world.n_x)])
    else:
        G = np.asarray(g_estimate, dtype=float).reshape(world.n_x, -1)
    if G.shape[1] != spec.q:
        raise ValueError(f"g_estimate must have {spec.q} outputs, got {G.shape[1]}")
    H, R = world.actions()
    A = psi_a_batch(spec, H, R)
    CA = A @ spec.C.T                      # row t: C psi_a(action t)
    gstar = world.g_star()
    if table is None:
        table = loss_table(spec, H, R, world.labels)
    cond_risk = world.cond @ table.T
    chosen = np.argmin(G @ CA.T, axis=1)
    bayes = np.argmin(cond_risk, axis=1)
    rows = np.arange(world.n_x)
    excess = float(world.p_x @ (cond_risk[rows, chosen] - cond_risk[rows, bayes]))
    sur = surrogate_risk(world, G) - surrogate_risk(world, gstar)
    const = c_l(spec, A)
    bound = 2.0 * const * np.sqrt(max(sur, 0.0))
    return BoundCheck(excess, float(bound), bool(excess <= bound + tol), float(sur), const)


def random_world(rng: np.random.Generator, kind: str, graph, n_x: int = 3,
                 concentration: float = 1.0, **spec_options) -> FiniteWorld:
    """Random finite world over all legal labelings of ``graph``."""
    labels = enumerate_state_space(graph, cap=ENUM_CAP)
    spec = make_spec(kind, graph, **spec_options)
    p_x = rng.dirichlet(np.full(n_x, concentration))
    cond = rng.dirichlet(np.full(len(labels), concentration), size=n_x)
    return FiniteWorld(spec, p_x, labels, cond)
