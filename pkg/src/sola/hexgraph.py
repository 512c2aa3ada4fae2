"""HEX graphs, legal assignments and the abstention prediction space.

A HEX graph carries two edge sets over ``d`` binary nodes: directed
hierarchy edges ``(parent, child)`` (a child may be on only if its parent is
on) and undirected exclusion edges (the two endpoints may not both be on).

Predictions with abstention are pairs ``(h, r)`` of binary vectors, where
``r[i] == 1`` means "predict node i" and ``r[i] == 0`` means "abstain".
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import CapExceeded, CycleError, GraphError, NotATree, SelfLoopError

ABSTAIN = "a"

# Consecutive-abstention rules for a parent/child pair of reject bits.
# "purpose": the two nodes may not both abstain (the documented intent).
# "literal": r_i + r_p(i) <= 1, read with r = 1 meaning "predict".
CONSECUTIVE_RULES = ("purpose", "literal")


@dataclass(frozen=True)
class HexGraph:
    d: int
    hierarchy: tuple = ()
    exclusion: tuple = ()
    parent: Optional[tuple] = field(default=None, compare=False)

    @property
    def children(self) -> tuple:
        kids = [[] for _ in range(self.d)]
        for p, c in self.hierarchy:
            kids[p].append(c)
        return tuple(tuple(sorted(k)) for k in kids)

    @property
    def is_forest(self) -> bool:
        return self.parent is not None

    @property
    def roots(self) -> tuple:
        if self.parent is None:
            return tuple(i for i in range(self.d)
                         if all(c != i for _, c in self.hierarchy))
        return tuple(i for i, p in enumerate(self.parent) if p is None)

    @property
    def is_tree(self) -> bool:
        return self.is_forest and len(self.roots) == 1

    @property
    def root(self) -> int:
        self.require_tree()
        return self.roots[0]

    def require_tree(self) -> None:
        if not self.is_tree:
            raise NotATree("hierarchy is not a single rooted tree")

    def depth(self) -> int:
        """Number of levels of a rooted tree (a single node has depth 1)."""
        self.require_tree()
        levels = [0] * self.d
        for i in self.topological_order():
            p = self.parent[i]
            levels[i] = 1 if p is None else levels[p] + 1
        return max(levels)

    def topological_order(self) -> list:
        return _topological_order(self.d, self.hierarchy)

    def edges(self) -> list:
        """Forest edges as ``(parent, child)`` pairs sorted by child index."""
        if not self.is_forest:
            raise NotATree("hierarchy is not a forest")
        return [(p, i) for i, p in enumerate(self.parent) if p is not None]

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "hierarchy": [list(e) for e in self.hierarchy],
            "exclusion": [list(e) for e in self.exclusion],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "HexGraph":
        return validate_graph(obj["d"], obj.get("hierarchy", ()), obj.get("exclusion", ()))

    def to_text(self) -> str:
        lines = [f"d={self.d}"]
        lines += [f"h {p} {c}" for p, c in self.hierarchy]
        lines += [f"e {i} {j}" for i, j in self.exclusion]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "HexGraph":
        d = None
        hier, excl = [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("d="):
                d = int(line[2:])
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] not in ("h", "e"):
                raise GraphError(f"line {lineno}: cannot parse {raw!r}")
            pair = (int(parts[1]), int(parts[2]))
            (hier if parts[0] == "h" else excl).append(pair)
        if d is None:
            raise GraphError("missing 'd=<int>' line")
        return validate_graph(d, hier, excl)


def load_graph(path) -> HexGraph:
    """Read a graph from a ``.json`` file or from the line-based text format."""
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        return HexGraph.from_dict(json.loads(text))
    return HexGraph.from_text(text)


def _topological_order(d, hierarchy):
    indeg = [0] * d
    kids = [[] for _ in range(d)]
    for p, c in hierarchy:
        indeg[c] += 1
        kids[p].append(c)
    ready = [i for i in range(d) if indeg[i] == 0]
    order = []
    while ready:
        ready.sort()
        i = ready.pop(0)
        order.append(i)
        for c in kids[i]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) != d:
        raise CycleError("hierarchy edges contain a directed cycle")
    return order


def validate_graph(d: int, hierarchy_edges: Iterable = (), exclusion_edges: Iterable = ()) -> HexGraph:
    """Check a HEX graph description and build a :class:`HexGraph`.

    Raises :class:`CycleError` when the hierarchy is not a DAG,
    :class:`SelfLoopError` for an exclusion edge ``{i, i}`` and
    :class:`IndexError` for out-of-range node indices.
    """
    d = int(d)
    if d < 1:
        raise GraphError("a HEX graph needs at least one node")

    def check(i):
        i = int(i)
        if not 0 <= i < d:
            raise IndexError(f"node index {i} out of range for d={d}")
        return i

    hier = sorted({(check(p), check(c)) for p, c in hierarchy_edges})
    excl = set()
    for i, j in exclusion_edges:
        i, j = check(i), check(j)
        if i == j:
            raise SelfLoopError(f"exclusion self loop on node {i}")
        excl.add((min(i, j), max(i, j)))
    for p, c in hier:
        if p == c:
            raise CycleError(f"hierarchy self loop on node {p}")
    _topological_order(d, hier)

    parent = [None] * d
    forest = True
    for p, c in hier:
        if parent[c] is not None:
            forest = False
            break
        parent[c] = p
    return HexGraph(d, tuple(hier), tuple(sorted(excl)), tuple(parent) if forest else None)


def is_legal(g: HexGraph, y) -> bool:
    y = np.asarray(y)
    if y.shape != (g.d,):
        raise ValueError(f"expected a vector of length {g.d}, got shape {y.shape}")
    for p, c in g.hierarchy:
        if y[c] > y[p]:
            return False
    for i, j in g.exclusion:
        if y[i] + y[j] > 1:
            return False
    return True


def _all_binary(d: int) -> np.ndarray:
    """All binary vectors of length d, in lexicographic order."""
    idx = np.arange(2 ** d)[:, None]
    shifts = np.arange(d - 1, -1, -1)[None, :]
    return ((idx >> shifts) & 1).astype(np.int8)


def enumerate_state_space(g: HexGraph, cap: int = 20) -> np.ndarray:
    """All legal assignments of ``g`` as rows of an int8 array, in lexicographic order."""
    if g.d > cap:
        raise CapExceeded(f"d={g.d} exceeds enumeration cap {cap}")
    before = [[] for _ in range(g.d)]
    for p, c in g.hierarchy:
        before[max(p, c)].append(("h", p, c))
    for i, j in g.exclusion:
        before[j].append(("e", i, j))

    out = []
    y = [0] * g.d

    def visit(k):
        if k == g.d:
            out.append(tuple(y))
            return
        for v in (0, 1):
            y[k] = v
            ok = True
            for kind, a, b in before[k]:
                if kind == "h" and y[b] > y[a]:
                    ok = False
                    break
                if kind == "e" and y[a] + y[b] > 1:
                    ok = False
                    break
            if ok:
                visit(k + 1)
        y[k] = 0

    visit(0)
    return np.array(out, dtype=np.int8).reshape(len(out), g.d)


def compose_prediction(y_h, y_r) -> tuple:
    """Combine predict and reject vectors into a labeling over ``{0, 1, 'a'}``."""
    y_h = np.asarray(y_h)
    y_r = np.asarray(y_r)
    if y_h.shape != y_r.shape:
        raise ValueError("y_h and y_r must have the same length")
    return tuple(ABSTAIN if r == 0 else int(h == 1) for h, r in zip(y_h, y_r))


@dataclass(frozen=True)
class AbstainedPrediction:
    y_h: tuple
    y_r: tuple

    def __post_init__(self):
        if len(self.y_h) != len(self.y_r):
            raise ValueError("y_h and y_r must have the same length")
        object.__setattr__(self, "y_h", tuple(int(v) for v in self.y_h))
        object.__setattr__(self, "y_r", tuple(int(v) for v in self.y_r))

    @property
    def composed(self) -> tuple:
        return compose_prediction(self.y_h, self.y_r)

    @property
    def n_abstained(self) -> int:
        return sum(1 for r in self.y_r if r == 0)

    def render(self) -> str:
        return "".join(str(v) for v in self.composed)


@dataclass(frozen=True)
class PredictionSpace:
    """The set of admissible ``(h, r)`` pairs over a forest (usually a rooted tree).

    For every tree edge ``p -> i`` the pair must satisfy the relaxed
    hierarchy ``h[i] * r[p] <= h[p] * r[p]`` (or ``h[i] <= h[p]`` when
    ``strict``) and the consecutive-abstention rule.  Nodes outside
    ``abstain_nodes`` always have ``r == 1``; ``abstain_nodes=()`` gives the
    abstention-free space.
    """

    graph: HexGraph
    strict: bool = False
    consecutive: str = "purpose"
    abstain_nodes: Optional[tuple] = None

    def __post_init__(self):
        if not self.graph.is_forest:
            raise NotATree("prediction spaces need every node to have at most one parent")
        if self.consecutive not in CONSECUTIVE_RULES:
            raise ValueError(f"consecutive must be one of {CONSECUTIVE_RULES}")
        if self.abstain_nodes is not None:
            nodes = tuple(sorted({int(i) for i in self.abstain_nodes}))
            for i in nodes:
                if not 0 <= i < self.graph.d:
                    raise IndexError(f"abstain node {i} out of range")
            object.__setattr__(self, "abstain_nodes", nodes)

    @property
    def d(self) -> int:
        return self.graph.d

    def can_abstain(self, i: int) -> bool:
        return self.abstain_nodes is None or i in self.abstain_nodes

    @property
    def forced_predict(self) -> tuple:
        """Nodes whose reject bit is fixed to 1."""
        return tuple(i for i in range(self.d) if not self.can_abstain(i))

    @property
    def allows_abstention(self) -> bool:
        return len(self.forced_predict) < self.d

    def without_abstention(self) -> "PredictionSpace":
        return PredictionSpace(self.graph, self.strict, self.consecutive, ())

    def contains(self, y_h, y_r) -> bool:
        h = np.asarray(y_h)
        r = np.asarray(y_r)
        if h.shape != (self.d,) or r.shape != (self.d,):
            raise ValueError(f"expected vectors of length {self.d}")
        if not (np.isin(h, (0, 1)).all() and np.isin(r, (0, 1)).all()):
            return False
        if any(r[i] != 1 for i in self.forced_predict):
            return False
        for p, i in self.graph.edges():
            if self.strict:
                if h[i] > h[p]:
                    return False
            elif h[i] * r[p] > h[p] * r[p]:
                return False
            if self.consecutive == "purpose":
                if r[i] == 0 and r[p] == 0:
                    return False
            elif r[i] + r[p] > 1:
                return False
        return True

    def enumerate(self, cap: int = 10) -> tuple:
        """All admissible pairs as ``(H, R)`` int8 arrays.

        Rows are sorted lexicographically on the concatenation ``(h, r)``.
        """
        d = self.d
        if d > cap:
            raise CapExceeded(f"d={d} exceeds prediction-space cap {cap}")
        B = _all_binary(d).astype(bool)
        edges = self.graph.edges()
        h_ok = np.ones(len(B), dtype=bool)
        r_ok = np.ones(len(B), dtype=bool)
        for i in self.forced_predict:
            r_ok &= B[:, i]
        for p, i in edges:
            if self.strict:
                h_ok &= ~(B[:, i] & ~B[:, p])
            if self.consecutive == "purpose":
                r_ok &= B[:, i] | B[:, p]
            else:
                r_ok &= ~(B[:, i] & B[:, p])
        Hc = B[h_ok]
        Rc = B[r_ok]
        mask = np.ones((len(Hc), len(Rc)), dtype=bool)
        if not self.strict:
            for p, i in edges:
                bad_h = Hc[:, i] & ~Hc[:, p]
                mask &= ~(bad_h[:, None] & Rc[:, p][None, :])
        hi, ri = np.nonzero(mask)
        return Hc[hi].astype(np.int8), Rc[ri].astype(np.int8)


def enumerate_prediction_space(g: HexGraph, cap: int = 10, **space_options) -> tuple:
    """Shorthand for ``PredictionSpace(g, **space_options).enumerate(cap)`` on a rooted tree."""
    g.require_tree()
    return PredictionSpace(g, **space_options).enumerate(cap)


def chain(d: int) -> HexGraph:
    return validate_graph(d, [(i, i + 1) for i in range(d - 1)])


def random_tree(d: int, rng: np.random.Generator, max_children: Optional[int] = None) -> HexGraph:
    """Random rooted tree on ``d`` nodes with root 0; parents precede children."""
    edges = []
    counts = [0] * d
    for i in range(1, d):
        choices = [p for p in range(i) if max_children is None or counts[p] < max_children]
        p = int(rng.choice(choices))
        counts[p] += 1
        edges.append((p, i))
    return validate_graph(d, edges)


def all_trees(d: int) -> list:
    """Every labelled rooted tree on ``d`` nodes where each parent index precedes its child."""
    graphs = []
    for parents in itertools.product(*[range(i) for i in range(1, d)]):
        graphs.append(validate_graph(d, [(p, i + 1) for i, p in enumerate(parents)]))
    return graphs
