"""Abstention sweeps over a (K_A, K_Ac) grid."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..decode import branch_and_bound, build_ilp
from ..exceptions import InfeasibleError
from ..losses import haloss_spec, psi_a
from .metrics import hamming, hamming_excluding_abstained

CURVE_HEADER = ("K_A", "K_Ac", "mean_abstentions", "hamming_left", "hamming_right",
                "weighted_abstention_coeff")
DEFAULT_K_A = tuple(round(0.05 * k, 2) for k in range(11))
DEFAULT_K_AC = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class SweepCell:
    K_A: float
    K_Ac: float
    mean_abstentions: float
    hamming_left: float
    hamming_right: float
    weighted_abstention_coeff: float

    def row(self) -> tuple:
        return tuple(getattr(self, k) for k in CURVE_HEADER)


@dataclass
class SweepResult:
    """Grid cells sorted by ``(K_Ac, K_A)`` plus the abstention-free baseline Hamming."""

    cells: list
    no_abstention_hamming: float
    strict: bool = False
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for cell in self.cells:
            w.writerow([_fmt(v) for v in cell.row()])
        return buf.getvalue()

    def cell(self, K_A: float, K_Ac: float) -> SweepCell:
        for c in self.cells:
            if c.K_A == K_A and c.K_Ac == K_Ac:
                return c
        raise KeyError((K_A, K_Ac))


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def abstention_coefficient(graph, c, K_Ac, consecutive, psi_x, y_h, y_r) -> float:
    """Part of the decoding objective that multiplies ``K_A``.

    The Ha-loss matrix is affine in ``K_A`` and its ``psi_a`` does not depend on
    the weights, so this is ``<psi_x, (C(1) - C(0)) psi_a(h, r)>``.
    """
    s0 = haloss_spec(graph, c, 0.0, K_Ac, consecutive)
    s1 = haloss_spec(graph, c, 1.0, K_Ac, consecutive)
    return float(np.asarray(psi_x) @ ((s1.C - s0.C) @ psi_a(s0, y_h, y_r)))


def _plain_start(spec, space, psi_x):
    try:
        rep = branch_and_bound(build_ilp(spec, space.without_abstention(), psi_x))
    except InfeasibleError:
        return None
    return rep.optimum.y_h, rep.optimum.y_r


def _run_cell(args):
    graph, c, K_A, K_Ac, consecutive, strict, abstain_nodes, G, Y, starts = args
    spec = haloss_spec(graph, c, K_A, K_Ac, consecutive)
    space = spec.prediction_space(strict=strict, abstain_nodes=abstain_nodes)
    s0 = haloss_spec(graph, c, 0.0, K_Ac, consecutive)
    dC = haloss_spec(graph, c, 1.0, K_Ac, consecutive).C - s0.C
    n_abs, left, right, coef = [], [], [], []
    for psi_x, y, start in zip(G, Y, starts):
        opt = branch_and_bound(build_ilp(spec, space, psi_x), warm_start=start).optimum
        n_abs.append(opt.n_abstained)
        left.append(hamming_excluding_abstained(opt, y, "left"))
        right.append(hamming_excluding_abstained(opt, y, "right", graph))
        coef.append(float(psi_x @ (dC @ psi_a(s0, opt.y_h, opt.y_r))))
    return SweepCell(float(K_A), float(K_Ac), float(np.mean(n_abs)), float(np.mean(left)),
                     float(np.mean(right)), float(np.mean(coef)))


def sweep_abstention(model, dataset, K_A_grid=DEFAULT_K_A, K_Ac_grid=DEFAULT_K_AC,
                     strict: bool = False, abstain_nodes=None, n_jobs: int = 1) -> SweepResult:
    """Decode ``dataset = (X, Y)`` for every grid cell with a fitted Ha-loss model.

    ``model`` is a fitted :class:`~sola.AbstentionStructuredPredictor` with
    ``loss="ha_loss"``; its node weights and consecutive rule are kept while
    ``K_A`` and ``K_Ac`` vary.  The regression output does not depend on
    either, so it is computed once.  ``abstain_nodes`` defaults to the
    model's setting.
    """
    if getattr(model, "loss", None) != "ha_loss":
        raise ValueError("sweeps need a model trained with loss='ha_loss'")
    K_A_grid = sorted({float(k) for k in K_A_grid})
    K_Ac_grid = sorted({float(k) for k in K_Ac_grid})
    if not K_A_grid or not K_Ac_grid:
        raise ValueError("grids must be non-empty")
    if min(K_A_grid) < 0 or min(K_Ac_grid) < 0:
        raise ValueError("grid values must be non-negative")
    X, Y = dataset
    Y = np.asarray(Y)
    if len(Y) == 0:
        raise ValueError("empty dataset")
    graph = model.graph
    abstain_nodes = model.abstain_nodes if abstain_nodes is None else abstain_nodes
    G = model.g_hat(X)
    c = model.spec_.c

    # abstention-free decoding: baseline Hamming and warm start for every cell
    base_spec = haloss_spec(graph, c, 0.0, K_Ac_grid[0], model.consecutive)
    base_space = base_spec.prediction_space(strict=strict, abstain_nodes=abstain_nodes)
    starts = [_plain_start(base_spec, base_space, g) for g in G]
    baseline = [hamming(s[0], y) for s, y in zip(starts, Y) if s is not None]
    no_abs = float(np.mean(baseline)) if len(baseline) == len(Y) else float("nan")

    jobs = [(graph, c, ka, kac, model.consecutive, strict, abstain_nodes, G, Y, starts)
            for kac in K_Ac_grid for ka in K_A_grid]
    if n_jobs == 1:
        cells = [_run_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            cells = list(pool.map(_run_cell, jobs))
    # pool.map keeps submission order, so the grid order is deterministic
    return SweepResult(cells, no_abs, strict, {"n_samples": len(Y)})
