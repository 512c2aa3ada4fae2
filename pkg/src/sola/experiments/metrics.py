"""Evaluation metrics that understand abstention."""
from __future__ import annotations

import numpy as np

from ..hexgraph import AbstainedPrediction, HexGraph

MODES = ("left", "right")


def _as_prediction(pred) -> AbstainedPrediction:
    if isinstance(pred, AbstainedPrediction):
        return pred
    h, r = pred
    return AbstainedPrediction(tuple(int(v) for v in h), tuple(int(v) for v in r))


def retained_nodes(pred, mode: str = "left", graph: HexGraph | None = None) -> np.ndarray:
    """Boolean mask of nodes kept for scoring.

    ``left`` drops abstained nodes; ``right`` also drops their direct children.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    pred = _as_prediction(pred)
    r = np.asarray(pred.y_r)
    keep = r == 1
    if mode == "right":
        if graph is None:
            raise ValueError("mode 'right' needs the graph")
        if graph.d != len(r):
            raise ValueError(f"graph has {graph.d} nodes, prediction has {len(r)}")
        for p, c in graph.hierarchy:
            if r[p] == 0:
                keep[c] = False
    return keep


def hamming_excluding_abstained(pred, y, mode: str = "left", graph: HexGraph | None = None) -> float:
    """Normalized Hamming distance over the retained nodes (0.0 when nothing is retained)."""
    pred = _as_prediction(pred)
    y = np.asarray(y)
    h = np.asarray(pred.y_h)
    if y.shape != h.shape:
        raise ValueError(f"dimension mismatch: prediction {h.shape}, label {y.shape}")
    keep = retained_nodes(pred, mode, graph)
    if not keep.any():
        return 0.0
    return float(np.mean(h[keep] != y[keep]))


def hamming(h, y) -> float:
    h, y = np.asarray(h), np.asarray(y)
    if h.shape != y.shape:
        raise ValueError(f"dimension mismatch: {h.shape} vs {y.shape}")
    return float(np.mean(h != y))


def micro_f1(preds, truths, nodes=None) -> float:
    """Micro-averaged F1 over node labels with abstained nodes left out.

    ``preds`` holds :class:`AbstainedPrediction` objects or ``(h, r)`` pairs.
    Returns 1.0 when neither side has a positive on the scored nodes.
    """
    preds = [_as_prediction(p) for p in preds]
    truths = [np.asarray(t) for t in truths]
    if not preds or len(preds) != len(truths):
        raise ValueError("need the same non-zero number of predictions and labels")
    tp = fp = fn = 0
    for pred, y in zip(preds, truths):
        h, r = np.asarray(pred.y_h), np.asarray(pred.y_r)
        if h.shape != y.shape:
            raise ValueError(f"dimension mismatch: prediction {h.shape}, label {y.shape}")
        keep = r == 1
        if nodes is not None:
            mask = np.zeros_like(keep)
            mask[list(nodes)] = True
            keep &= mask
        hk, yk = h[keep], y[keep]
        tp += int(np.sum((hk == 1) & (yk == 1)))
        fp += int(np.sum((hk == 1) & (yk == 0)))
        fn += int(np.sum((hk == 0) & (yk == 1)))
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def abstention_representation(pred) -> np.ndarray:
    """``h - (1 - r)``: 1 for predicted on, 0 for predicted off, -1 for abstained."""
    pred = _as_prediction(pred)
    return np.asarray(pred.y_h, dtype=float) - (1.0 - np.asarray(pred.y_r, dtype=float))
