"""Abstention-aware losses written as bilinear forms.

Every loss is ``<psi_wa(y), C psi_a(y_h, y_r)>``.  The prediction-side map
``psi_a`` is affine in the stacked binary interactions::

    psi_a(h, r) = offset + M @ concat(h, r, kron(h, r))

Each loss also has a direct indicator-sum evaluator (:func:`loss_direct`)
that never touches the matrices; the two paths are compared exhaustively in
the test suite.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hexgraph import HexGraph, PredictionSpace, is_legal, validate_graph

KINDS = ("binary_abstention", "hamming", "h_loss", "ha_loss")


# ---------------------------------------------------------------------------
# affine expressions over the atoms 1, h_j, r_k, h_j r_k
# ---------------------------------------------------------------------------
ONE = ("1",)


def _h(j):
    return {("h", j): 1.0}


def _r(k):
    return {("r", k): 1.0}


def _hr(j, k):
    return {("hr", j, k): 1.0}


def _lin(*parts):
    """Sum ``(coef, expr)`` pairs into one expression; zero terms are kept."""
    out = {}
    for coef, expr in parts:
        for atom, v in expr.items():
            out[atom] = out.get(atom, 0.0) + coef * v
    return out


_one = {ONE: 1.0}


def stack_index(atom, d: int) -> Optional[int]:
    """Column of ``concat(h, r, kron(h, r))`` holding ``atom`` (None for the constant)."""
    kind = atom[0]
    if kind == "1":
        return None
    if kind == "h":
        return atom[1]
    if kind == "r":
        return d + atom[1]
    return 2 * d + atom[1] * d + atom[2]


def stack_interactions(y_h, y_r) -> np.ndarray:
    y_h = np.asarray(y_h, dtype=float)
    y_r = np.asarray(y_r, dtype=float)
    return np.concatenate([y_h, y_r, np.kron(y_h, y_r)])


def _atom_value(atom, h, r):
    kind = atom[0]
    if kind == "1":
        return 1.0
    if kind == "h":
        return float(h[atom[1]])
    if kind == "r":
        return float(r[atom[1]])
    return float(h[atom[1]] * r[atom[2]])


def parent_values(g: HexGraph, z) -> np.ndarray:
    """``z[p(i)]`` for every node, with 1 for the root (a virtual, always-on parent)."""
    z = np.asarray(z, dtype=float)
    return np.array([1.0 if p is None else z[p] for p in g.parent])


def parent_matrix(g: HexGraph) -> np.ndarray:
    """``G[i, p(i)] = 1``; the root row is empty."""
    G = np.zeros((g.d, g.d))
    for i, p in enumerate(g.parent):
        if p is not None:
            G[i, p] = 1.0
    return G


# ---------------------------------------------------------------------------
# LossSpec
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class LossSpec:
    kind: str
    graph: HexGraph
    C: np.ndarray
    atoms: tuple
    psi_a_rows: tuple
    c: np.ndarray
    K_A: float = 0.0
    K_Ac: float = 0.0
    c_reject: float = 0.0
    consecutive: str = "purpose"
    _M: np.ndarray = field(default=None, repr=False)
    _offset: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        M, offset = _affine_matrices(self.psi_a_rows, self.graph.d)
        object.__setattr__(self, "_M", M)
        object.__setattr__(self, "_offset", offset)
        if self.C.shape != (self.q, self.p):
            raise ValueError(f"C has shape {self.C.shape}, expected {(self.q, self.p)}")

    @property
    def d(self) -> int:
        return self.graph.d

    @property
    def p(self) -> int:
        return len(self.psi_a_rows)

    @property
    def q(self) -> int:
        return {"binary_abstention": 2, "hamming": 2 * self.d,
                "h_loss": 2 * self.d, "ha_loss": 4 * self.d}[self.kind]

    @property
    def M(self) -> np.ndarray:
        return self._M

    @property
    def offset(self) -> np.ndarray:
        return self._offset

    @property
    def abstains(self) -> bool:
        """Whether the loss charges anything for the reject vector."""
        return self.kind in ("binary_abstention", "ha_loss")

    def prediction_space(self, strict: bool = False, abstain_nodes=None) -> PredictionSpace:
        nodes = abstain_nodes if self.abstains else ()
        return PredictionSpace(self.graph, strict=strict, consecutive=self.consecutive,
                               abstain_nodes=nodes)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "graph": self.graph.to_dict(),
            "c": self.c.tolist(),
            "K_A": self.K_A,
            "K_Ac": self.K_Ac,
            "c_reject": self.c_reject,
            "consecutive": self.consecutive,
            "C": self.C.tolist(),
            "M": self.M.tolist(),
            "offset": self.offset.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LossSpec":
        """Rebuild from parameters; stored matrices, if present, must agree."""
        graph = HexGraph.from_dict(obj["graph"])
        spec = make_spec(obj["kind"], graph, c=obj.get("c"), K_A=obj.get("K_A", 0.0),
                         K_Ac=obj.get("K_Ac", 0.0), c_reject=obj.get("c_reject", 0.0),
                         consecutive=obj.get("consecutive", "purpose"))
        for key in ("C", "M", "offset"):
            if key in obj and not np.allclose(np.asarray(obj[key], dtype=float),
                                              getattr(spec, key), atol=1e-12):
                raise ValueError(f"stored {key} does not match the rebuilt loss")
        return spec


def _affine_matrices(rows, d):
    M = np.zeros((len(rows), 2 * d + d * d))
    offset = np.zeros(len(rows))
    for k, expr in enumerate(rows):
        for atom, v in expr.items():
            col = stack_index(atom, d)
            if col is None:
                offset[k] += v
            else:
                M[k, col] += v
    return M, offset


def save_spec(spec: LossSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=1, sort_keys=True)


def load_spec(path) -> LossSpec:
    with open(path) as fh:
        return LossSpec.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class WeightScheme:
    c: np.ndarray
    c_A: np.ndarray
    c_Ac: np.ndarray


def sibling_weights(g: HexGraph) -> np.ndarray:
    """Root weight 1; each child gets its parent's weight split evenly among siblings."""
    g.require_tree()
    c = np.zeros(g.d)
    kids = g.children
    for i in g.topological_order():
        p = g.parent[i]
        c[i] = 1.0 if p is None else c[p] / len(kids[p])
    return c


def weight_scheme(g: HexGraph, K_A: float, K_Ac: float, c=None) -> WeightScheme:
    c = sibling_weights(g) if c is None else np.asarray(c, dtype=float)
    return WeightScheme(c, K_A * c, K_Ac * c)


def _check_weights(g, c):
    c = np.asarray(c, dtype=float)
    if c.shape != (g.d,):
        raise ValueError(f"weight vector must have length {g.d}")
    if (c < 0).any():
        raise ValueError("weights must be non negative")
    for p, i in g.edges():
        if c[i] > c[p] + 1e-12:
            raise ValueError(f"weights increase from node {p} to its child {i}")
    return c


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------
def binary_abstention_spec(c_reject: float) -> LossSpec:
    if not 0.0 <= c_reject <= 0.5:
        raise ValueError("rejection cost must lie in [0, 0.5]")
    g = validate_graph(1)
    rows = (_hr(0, 0), _lin((1, _r(0)), (-1, _hr(0, 0))), _lin((1, _one), (-1, _r(0))))
    C = np.array([[0.0, 1.0, c_reject], [1.0, 0.0, c_reject]])
    atoms = tuple(sorted({a for row in rows for a in row}, key=str))
    return LossSpec("binary_abstention", g, C, atoms, rows, np.ones(1), c_reject=float(c_reject))


def hamming_spec(d: int, graph: Optional[HexGraph] = None) -> LossSpec:
    if d < 1:
        raise ValueError("d must be positive")
    g = graph if graph is not None else validate_graph(d)
    if g.d != d:
        raise ValueError("graph size does not match d")
    rows = tuple(_lin((1, _one), (-1, _h(i))) for i in range(d)) + tuple(_h(i) for i in range(d))
    atoms = tuple(sorted({a for row in rows for a in row}, key=str))
    return LossSpec("hamming", g, np.eye(2 * d), atoms, rows, np.ones(d))


def hloss_spec(g: HexGraph, c=None) -> LossSpec:
    """H-loss: a node is charged ``c[i]`` when wrong while its parent is right.

    ``psi_wa(z) = (z, G z + e_root)`` where ``(G z)_i = z[p(i)]``; the root's
    virtual parent is always on, so the root is charged whenever it is wrong.
    Only exact on abstention-free predictions that respect the hierarchy.
    """
    g.require_tree()
    c = sibling_weights(g) if c is None else _check_weights(g, c)
    d = g.d
    rows = tuple(_h(i) for i in range(d))
    rows += tuple(_one if p is None else _h(p) for p in g.parent)
    D = np.diag(c)
    C = np.block([[-2 * D, D], [D, np.zeros((d, d))]])
    atoms = tuple(sorted({a for row in rows for a in row}, key=str))
    return LossSpec("h_loss", g, C, atoms, rows, c)


def _ha_terms(g, c, K_A, K_Ac, consecutive):
    """Yield ``(feature_index, coefficient, expression)`` triples of the Ha-loss.

    Feature layout of psi_wa (length 4d): ``y``, ``1 - y``, parent value
    ``u`` (1 at the root) and ``1 - u``.
    """
    d = g.d
    Y1 = lambda i: i
    Y0 = lambda i: d + i
    P1 = lambda i: 2 * d + i
    P0 = lambda i: 3 * d + i
    one = _one
    for i, p in enumerate(g.parent):
        cA, cAc, ci = K_A * c[i], K_Ac * c[i], c[i]
        if p is None:
            # virtual parent: always predicted and correct, never abstained
            yield P1(i), cA, _lin((1, one), (-1, _r(i)))
            yield Y0(i), ci, _hr(i, i)
            yield Y1(i), ci, _lin((1, _r(i)), (-1, _hr(i, i)))
            continue
        if consecutive == "purpose":
            # feasible pairs never abstain twice in a row: r_i r_p = r_i + r_p - 1
            yield P1(i), cA, _lin((1, _h(p)), (-1, _hr(p, i)))
            yield P0(i), cA, _lin((1, one), (-1, _r(i)), (-1, _h(p)), (1, _hr(p, i)))
            yield Y0(i), cAc, _lin((1, _h(i)), (-1, _hr(i, p)))
            yield Y1(i), cAc, _lin((1, one), (-1, _r(p)), (-1, _h(i)), (1, _hr(i, p)))
            # wrong child under a correct parent; the parent being predicted
            # forces h_i <= h_p, so y = (1, 1) charges h_p - h_i and
            # y = (1, 0) charges h_i
            miss_on = _lin((1, _hr(p, i)), (1, _hr(p, p)), (-1, _h(p)),
                           (-1, _hr(i, i)), (-1, _hr(i, p)), (1, _h(i)))
            miss_off = _lin((1, _hr(i, i)), (1, _hr(i, p)), (-1, _h(i)))
            yield Y1(i), ci, miss_on
            yield P1(i), ci, miss_off
            yield Y1(i), -ci, miss_off
        else:
            # r_i r_p = 0 on every edge: a predicted child never has a
            # predicted parent, so only abstention terms survive
            yield P1(i), cA, _hr(p, p)
            yield P0(i), cA, _lin((1, _r(p)), (-1, _hr(p, p)))
            yield Y1(i), cAc, _lin((1, one), (-1, _r(p)), (-1, _hr(i, i)))
            yield Y0(i), cAc, _lin((1, one), (-1, _r(p)), (-1, _r(i)), (1, _hr(i, i)))


def haloss_spec(g: HexGraph, c=None, K_A: float = 0.0, K_Ac: float = 0.0,
                consecutive: str = "purpose") -> LossSpec:
    """Abstention-aware H-loss with constant multipliers ``K_A`` and ``K_Ac``.

    Abstaining at node i costs ``K_A c[i]`` when the parent is right; a wrong
    prediction under an abstained parent costs ``K_Ac c[i]``; a wrong
    prediction under a right parent costs ``c[i]``.
    """
    g.require_tree()
    if K_A < 0 or K_Ac < 0:
        raise ValueError("K_A and K_Ac must be non negative")
    if consecutive not in ("purpose", "literal"):
        raise ValueError("consecutive must be 'purpose' or 'literal'")
    c = sibling_weights(g) if c is None else _check_weights(g, c)
    terms = list(_ha_terms(g, c, float(K_A), float(K_Ac), consecutive))
    atoms = {ONE}
    for _, _, expr in terms:
        atoms.update(expr)
    atoms = tuple(sorted(atoms, key=lambda a: (len(a), a)))
    col = {a: k for k, a in enumerate(atoms)}
    C = np.zeros((4 * g.d, len(atoms)))
    for feat, coef, expr in terms:
        for atom, v in expr.items():
            C[feat, col[atom]] += coef * v
    rows = tuple({a: 1.0} for a in atoms)
    return LossSpec("ha_loss", g, C, atoms, rows, c, K_A=float(K_A), K_Ac=float(K_Ac),
                    consecutive=consecutive)


def make_spec(kind: str, graph: HexGraph, c=None, K_A=0.0, K_Ac=0.0, c_reject=0.0,
              consecutive="purpose") -> LossSpec:
    if kind == "binary_abstention":
        return binary_abstention_spec(c_reject)
    if kind == "hamming":
        return hamming_spec(graph.d, graph)
    if kind == "h_loss":
        return hloss_spec(graph, c)
    if kind == "ha_loss":
        return haloss_spec(graph, c, K_A, K_Ac, consecutive)
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {KINDS}")


# ---------------------------------------------------------------------------
# feature maps and evaluators
# ---------------------------------------------------------------------------
def _vec(spec, v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.d,):
        raise ValueError(f"{name} must have length {spec.d}, got shape {v.shape}")
    return v


def psi_wa(spec: LossSpec, y) -> np.ndarray:
    y = _vec(spec, y, "y")
    if spec.kind in ("binary_abstention", "hamming"):
        return np.concatenate([y, 1 - y])
    u = parent_values(spec.graph, y)
    if spec.kind == "h_loss":
        return np.concatenate([y, u])
    return np.concatenate([y, 1 - y, u, 1 - u])


def psi_wa_batch(spec: LossSpec, Y) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    return np.array([psi_wa(spec, y) for y in Y]).reshape(len(Y), spec.q)


def psi_a(spec: LossSpec, y_h, y_r) -> np.ndarray:
    """Prediction-side features, computed from their definitions (not through ``M``)."""
    h = _vec(spec, y_h, "y_h")
    r = _vec(spec, y_r, "y_r")
    if spec.kind == "binary_abstention":
        return np.array([h[0] * r[0], (1 - h[0]) * r[0], 1 - r[0]])
    if spec.kind == "hamming":
        return np.concatenate([1 - h, h])
    if spec.kind == "h_loss":
        return np.concatenate([h, parent_values(spec.graph, h)])
    return np.array([_atom_value(a, h, r) for a in spec.atoms])


def psi_a_affine(spec: LossSpec, y_h, y_r) -> np.ndarray:
    """``offset + M @ concat(h, r, kron(h, r))``."""
    return spec.offset + spec.M @ stack_interactions(y_h, y_r)


def loss_innerproduct(spec: LossSpec, y_h, y_r, y) -> float:
    return float(psi_wa(spec, y) @ spec.C @ psi_a(spec, y_h, y_r))


def loss_direct(spec: LossSpec, y_h, y_r, y) -> float:
    """Evaluate the loss from its indicator definition; no matrices involved."""
    h = _vec(spec, y_h, "y_h").astype(int)
    r = _vec(spec, y_r, "y_r").astype(int)
    y = _vec(spec, y, "y").astype(int)
    if not is_legal(spec.graph, y):
        raise ValueError("y is not a legal assignment")
    if spec.kind == "binary_abstention":
        if r[0] == 0:
            return float(spec.c_reject)
        return float(h[0] != y[0])
    if spec.kind == "hamming":
        return float(np.sum(h != y))
    g = spec.graph
    if spec.kind == "h_loss":
        total = 0.0
        for i, p in enumerate(g.parent):
            parent_ok = p is None or h[p] == y[p]
            if h[i] != y[i] and parent_ok:
                total += spec.c[i]
        return float(total)

    f = ["a" if r[i] == 0 else int(h[i]) for i in range(g.d)]
    total = 0.0
    for i, p in enumerate(g.parent):
        if p is None:
            parent_right, parent_abstained = True, False
        else:
            parent_right, parent_abstained = f[p] == y[p], f[p] == "a"
        wrong = f[i] != y[i]
        if f[i] == "a" and parent_right:
            total += spec.K_A * spec.c[i]
        if wrong and parent_abstained:
            total += spec.K_Ac * spec.c[i]
        if wrong and parent_right and f[i] != "a":
            total += spec.c[i]
    return float(total)


def prediction_objective(spec: LossSpec, psi_x, y_h, y_r) -> float:
    """Decoding score ``<psi_x, C psi_a(y_h, y_r)>``."""
    return float(np.asarray(psi_x, dtype=float) @ spec.C @ psi_a(spec, y_h, y_r))


def operator_norm(spec: LossSpec) -> float:
    return float(np.linalg.norm(spec.C, 2))



def psi_a_batch(spec: LossSpec, H, R) -> np.ndarray:
    """Row-wise :func:`psi_a` for stacked predictions ``H`` and ``R``."""
    H = np.asarray(H, dtype=float)
    R = np.asarray(R, dtype=float)
    if spec.kind == "binary_abstention":
        h, r = H[:, 0], R[:, 0]
        return np.stack([h * r, (1 - h) * r, 1 - r], axis=1)
    if spec.kind == "hamming":
        return np.hstack([1 - H, H])
    if spec.kind == "h_loss":
        U = np.stack([np.ones(len(H)) if p is None else H[:, p] for p in spec.graph.parent], axis=1)
        return np.hstack([H, U])
    cols = []
    for a in spec.atoms:
        if a[0] == "1":
            cols.append(np.ones(len(H)))
        elif a[0] == "h":
            cols.append(H[:, a[1]])
        elif a[0] == "r":
            cols.append(R[:, a[1]])
        else:
            cols.append(H[:, a[1]] * R[:, a[2]])
    return np.stack(cols, axis=1)
