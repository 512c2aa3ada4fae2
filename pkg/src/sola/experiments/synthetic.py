"""Synthetic opinion-like data over HEX graphs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..hexgraph import HexGraph, validate_graph


def opinion_tree(n_aspects: int, n_polarities: int, exclusive_polarities: bool = True) -> HexGraph:
    """Root -> aspects -> polarities.

    Node 0 is the root, nodes ``1..n_aspects`` are the aspects and the
    polarities of aspect ``a`` (1-based) follow in blocks of
    ``n_polarities``.  With ``exclusive_polarities`` the polarities of one
    aspect are pairwise exclusive.
    """
    if n_aspects < 1 or n_polarities < 1:
        raise ValueError("counts must be positive")
    hier, excl = [], []
    for a in range(1, n_aspects + 1):
        hier.append((0, a))
        block = [polarity_node(n_aspects, n_polarities, a, j) for j in range(n_polarities)]
        hier += [(a, k) for k in block]
        if exclusive_polarities:
            excl += [(u, v) for i, u in enumerate(block) for v in block[i + 1:]]
    return validate_graph(1 + n_aspects * (1 + n_polarities), hier, excl)


def polarity_node(n_aspects: int, n_polarities: int, aspect: int, j: int) -> int:
    return 1 + n_aspects + (aspect - 1) * n_polarities + j


def opinion_shape(g: HexGraph) -> tuple:
    """Recover ``(n_aspects, n_polarities)`` from a graph built by :func:`opinion_tree`."""
    n_aspects = len(g.children[0])
    n_pol = (g.d - 1 - n_aspects) // n_aspects
    return n_aspects, n_pol


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator settings.

    ``noise`` is the probability that a node's bit is flipped in the labeling
    the features are drawn from (the emitted label is never flipped);
    ``hard_nodes`` use ``hard_noise`` instead.
    """

    graph: HexGraph
    n_train: int = 200
    n_test: int = 100
    feature_dim: int = 20
    noise: float = 0.0
    hard_nodes: tuple = ()
    hard_noise: float = 0.35
    active_prob: float = 0.3
    root_active: bool = True
    jitter: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for name in ("noise", "hard_noise"):
            v = getattr(self, name)
            if not 0.0 <= v < 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5)")
        if self.n_train < 0 or self.n_test < 0 or self.feature_dim < 1:
            raise ValueError("sizes must be non negative and feature_dim positive")
        object.__setattr__(self, "hard_nodes", tuple(sorted(int(i) for i in self.hard_nodes)))


def _one_of_groups(g: HexGraph) -> dict:
    """Parents whose children are pairwise exclusive (exactly one child gets picked)."""
    excl = set(g.exclusion)
    groups = {}
    for p, kids in enumerate(g.children):
        if len(kids) >= 2 and all((u, v) in excl for i, u in enumerate(kids) for v in kids[i + 1:]):
            groups[p] = kids
    return groups


def sample_labels(g: HexGraph, n: int, rng: np.random.Generator, active_prob: float = 0.3,
                  root_active: bool = True) -> np.ndarray:
    """Legal labelings drawn top-down.

    A child can only switch on under an active parent.  Children forming an
    exclusion clique get exactly one active member; other children switch on
    independently with ``active_prob`` unless an active exclusion neighbour
    blocks them.
    """
    order = g.topological_order()
    groups = _one_of_groups(g)
    neighbours = [[] for _ in range(g.d)]
    for i, j in g.exclusion:
        neighbours[i].append(j)
        neighbours[j].append(i)
    Y = np.zeros((n, g.d), dtype=np.int8)
    for s in range(n):
        y = Y[s]
        for i in order:
            p = g.parent[i] if g.parent is not None else None
            parents = [p] if p is not None else [a for a, c in g.hierarchy if c == i]
            if parents and not all(y[a] for a in parents):
                continue
            if p is not None and p in groups:
                continue
            if not parents and root_active:
                y[i] = 1
            elif rng.random() < active_prob and not any(y[j] for j in neighbours[i]):
                y[i] = 1
            if y[i] and i in groups:
                y[groups[i][rng.integers(len(groups[i]))]] = 1
    return Y


def _features(cfg: SyntheticConfig, Y: np.ndarray, prototypes: np.ndarray,
              rng: np.random.Generator) -> np.ndarray:
    flip = np.full(cfg.graph.d, cfg.noise)
    flip[list(cfg.hard_nodes)] = cfg.hard_noise
    Z = Y.astype(float)
    mask = rng.random(Y.shape) < flip[None, :]
    Z[mask] = 1.0 - Z[mask]
    X = Z @ prototypes
    if cfg.jitter:
        X += cfg.jitter * rng.standard_normal(X.shape)
    return X


def prototypes_for(cfg: SyntheticConfig) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, 1])
    return rng.standard_normal((cfg.graph.d, cfg.feature_dim)) / np.sqrt(cfg.feature_dim)


def synth_dataset(cfg: SyntheticConfig):
    """Return ``((X_train, Y_train), (X_test, Y_test))``; fully determined by ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    U = prototypes_for(cfg)
    Y = sample_labels(cfg.graph, cfg.n_train + cfg.n_test, rng, cfg.active_prob, cfg.root_active)
    X = _features(cfg, Y, U, rng)
    n = cfg.n_train
    return (X[:n], Y[:n]), (X[n:], Y[n:])


# ---------------------------------------------------------------------------
# review-level data
# ---------------------------------------------------------------------------
@dataclass
class Reviews:
    """Sentences grouped into reviews, with one rating in {-1, 0, 1} per overall aspect."""

    review_ids: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    ratings: dict = field(default_factory=dict)

    @property
    def ids(self) -> list:
        return sorted(set(self.review_ids.tolist()))

    def groups(self):
        for rid in self.ids:
            yield rid, np.flatnonzero(self.review_ids == rid)


def ratings_from_labels(g: HexGraph, Y: np.ndarray, n_overall: int) -> np.ndarray:
    """Sign of (positive mentions - negative mentions) per aspect; polarity 0 is positive, 1 negative."""
    n_aspects, n_pol = opinion_shape(g)
    if n_pol < 2:
        raise ValueError("ratings need at least a positive and a negative polarity")
    out = np.zeros(n_overall)
    for a in range(1, n_overall + 1):
        pos = Y[:, polarity_node(n_aspects, n_pol, a, 0)].sum()
        neg = Y[:, polarity_node(n_aspects, n_pol, a, 1)].sum()
        out[a - 1] = np.sign(pos - neg)
    return out


def synth_reviews(cfg: SyntheticConfig, n_reviews: int, sentences: tuple = (3, 8),
                  n_overall: int = 5, agreement: float = 0.8, offset: int = 0) -> Reviews:
    """Reviews of an opinion tree with a per-review mood per aspect.

    Each review draws a mood in {positive, negative, neutral} per aspect; an
    active aspect in one of its sentences takes the mood's polarity with
    probability ``agreement``.  Ratings are computed from the sentence labels.
    ``offset`` separates the random streams of train and test reviews.
    """
    g = cfg.graph
    n_aspects, n_pol = opinion_shape(g)
    if not 1 <= n_overall <= n_aspects:
        raise ValueError("n_overall must be between 1 and the number of aspects")
    rng = np.random.default_rng([cfg.seed, 2, offset])
    U = prototypes_for(cfg)
    ids, Ys = [], []
    for rid in range(n_reviews):
        k = int(rng.integers(sentences[0], sentences[1] + 1))
        mood = rng.integers(n_pol, size=n_aspects)
        Y = sample_labels(g, k, rng, cfg.active_prob, cfg.root_active)
        for s in range(k):
            for a in range(1, n_aspects + 1):
                if not Y[s, a]:
                    continue
                block = [polarity_node(n_aspects, n_pol, a, j) for j in range(n_pol)]
                Y[s, block] = 0
                j = mood[a - 1] if rng.random() < agreement else rng.integers(n_pol)
                Y[s, block[j]] = 1
        ids += [offset + rid] * k
        Ys.append(Y)
    Y = np.vstack(Ys)
    X = _features(cfg, Y, U, rng)
    review_ids = np.array(ids)
    ratings = {rid: ratings_from_labels(g, Y[review_ids == rid], n_overall)
               for rid in sorted(set(ids))}
    return Reviews(review_ids, X, Y, ratings)
