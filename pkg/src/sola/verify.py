"""Oracle suites shared by the ``verify`` command.

Each suite compares two independent computations: the bilinear loss form
against the direct loss formulas, branch-and-bound against enumeration,
the root relaxation against integrality, and the decoded excess risk
against the surrogate bound.  Output is deterministic for a given seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .decode import branch_and_bound, brute_force_decode, build_ilp
from .experiments.risk import loss_table, random_world, risk_bound_check
from .hexgraph import all_trees, enumerate_state_space, random_tree
from .losses import KINDS, loss_direct, make_spec, psi_a_batch, psi_wa_batch

PASS, FAIL, SKIP = "PASS", "FAIL", "SKIP"


@dataclass
class SuiteResult:
    name: str
    status: str
    checked: int = 0
    failures: list = field(default_factory=list)
    detail: str = ""

    def line(self) -> str:
        msg = f"{self.name}: {self.status} checked={self.checked} failures={len(self.failures)}"
        return msg + (f" {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class VerifyConfig:
    seed: int = 0
    d_cap: int = 10
    loss_d_max: int = 5
    decoder_d_max: int = 8
    decoder_instances: int = 100
    integrality_d_max: int = 8
    integrality_instances: int = 200
    risk_d_max: int = 4
    risk_worlds: int = 1000
    risk_max_x: int = 5

    @classmethod
    def from_dict(cls, obj: dict) -> "VerifyConfig":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown verify options: {sorted(unknown)}")
        cfg = cls(**obj)
        for name, v in vars(cfg).items():
            if name != "seed" and (not isinstance(v, int) or v < 0):
                raise ValueError(f"verify option {name} must be a non-negative integer")
        return cfg


SpecFactory = Callable[..., object]


def loss_variants(d: int):
    """Spec settings covered for every tree with ``d`` nodes."""
    yield "hamming", {}
    yield "h_loss", {}
    for rule in ("purpose", "literal"):
        yield "ha_loss", {"K_A": 0.3, "K_Ac": 0.6, "consecutive": rule}
        yield "ha_loss", {"K_A": 0.0, "K_Ac": 0.0, "consecutive": rule}
    if d == 1:
        for c in (0.0, 0.25, 0.5):
            yield "binary_abstention", {"c_reject": c}


def _skip(name, need, cap):
    return SuiteResult(name, SKIP, detail=f"needs d={need} above cap {cap}")


def loss_suite(cfg: VerifyConfig, spec_factory: Optional[SpecFactory] = None,
               tol: float = 1e-12) -> SuiteResult:
    """Bilinear loss equals the direct loss on every legal label and action, all trees."""
    name = "loss-equality"
    if cfg.loss_d_max > cfg.d_cap:
        return _skip(name, cfg.loss_d_max, cfg.d_cap)
    factory = spec_factory or make_spec
    res = SuiteResult(name, PASS)
    for d in range(1, cfg.loss_d_max + 1):
        for g in all_trees(d):
            labels = enumerate_state_space(g, cap=cfg.d_cap)
            for kind, opts in loss_variants(d):
                spec = factory(kind, g, **opts)
                H, R = spec.prediction_space().enumerate(cap=cfg.d_cap)
                bil = psi_wa_batch(spec, labels) @ spec.C @ psi_a_batch(spec, H, R).T
                for j, y in enumerate(labels):
                    for t in range(len(H)):
                        res.checked += 1
                        direct = loss_direct(spec, H[t], R[t], y)
                        if abs(bil[j, t] - direct) > tol:
                            res.failures.append((kind, g.edges(), tuple(y), tuple(H[t]),
                                                 tuple(R[t])))
    if res.failures:
        res.status = FAIL
    return res


def random_instance(rng: np.random.Generator, kind: str, d_max: int):
    """A random spec, prediction space and feature vector for ``kind``."""
    if kind == "binary_abstention":
        spec = make_spec(kind, None, c_reject=float(rng.uniform(0, 0.5)))
        return spec, spec.prediction_space(), rng.normal(size=spec.q)
    d = int(rng.integers(1, d_max + 1))
    g = random_tree(d, rng)
    opts = {}
    if kind == "ha_loss":
        opts = {"K_A": float(rng.uniform(0, 1)), "K_Ac": float(rng.uniform(0, 1)),
                "consecutive": str(rng.choice(["purpose", "literal"]))}
    spec = make_spec(kind, g, **opts)
    abstain = None
    # under the literal rule a restricted abstain set can leave the space empty
    if kind == "ha_loss" and opts["consecutive"] == "purpose" and rng.random() < 0.3:
        abstain = tuple(int(i) for i in np.flatnonzero(rng.random(d) < 0.5))
    space = spec.prediction_space(strict=bool(rng.random() < 0.3), abstain_nodes=abstain)
    return spec, space, rng.normal(size=spec.q)


def decoder_suite(cfg: VerifyConfig, tol: float = 1e-9) -> SuiteResult:
    """Branch-and-bound objective equals enumeration; the returned point is feasible."""
    name = "decoder-oracle"
    if cfg.decoder_d_max > cfg.d_cap:
        return _skip(name, cfg.decoder_d_max, cfg.d_cap)
    rng = np.random.default_rng([cfg.seed, 11])
    res = SuiteResult(name, PASS)
    for kind in KINDS:
        for _ in range(cfg.decoder_instances):
            spec, space, psi = random_instance(rng, kind, cfg.decoder_d_max)
            rep = branch_and_bound(build_ilp(spec, space, psi))
            _, best = brute_force_decode(spec, space, psi, cap=cfg.d_cap)
            res.checked += 1
            ok = abs(rep.objective_value - best) <= tol
            ok &= space.contains(rep.optimum.y_h, rep.optimum.y_r)
            if not ok:
                res.failures.append((kind, rep.objective_value, best))
    if res.failures:
        res.status = FAIL
    return res


def integrality_suite(cfg: VerifyConfig) -> SuiteResult:
    """Abstention-free H-loss decoding: the root relaxation is already integral."""
    name = "hloss-integrality"
    if cfg.integrality_d_max > cfg.d_cap:
        return _skip(name, cfg.integrality_d_max, cfg.d_cap)
    rng = np.random.default_rng([cfg.seed, 13])
    res = SuiteResult(name, PASS)
    for _ in range(cfg.integrality_instances):
        g = random_tree(int(rng.integers(1, cfg.integrality_d_max + 1)), rng)
        spec = make_spec("h_loss", g)
        psi = rng.normal(size=spec.q)
        rep = branch_and_bound(build_ilp(spec, spec.prediction_space().without_abstention(), psi))
        res.checked += 1
        if not rep.lp_integral_at_root or rep.branch_nodes != 0:
            res.failures.append((g.edges(), rep.nodes_explored))
    if res.failures:
        res.status = FAIL
    return res


def risk_suite(cfg: VerifyConfig) -> SuiteResult:
    """Excess risk of the decoded rule never exceeds ``2 c_l sqrt(surrogate excess)``."""
    name = "risk-bound"
    if cfg.risk_d_max > cfg.d_cap:
        return _skip(name, cfg.risk_d_max, cfg.d_cap)
    rng = np.random.default_rng([cfg.seed, 17])
    res = SuiteResult(name, PASS)
    kinds = ("hamming", "h_loss", "ha_loss", "binary_abstention")
    tables = {}
    for k in range(cfg.risk_worlds):
        kind = kinds[k % len(kinds)]
        d = 1 if kind == "binary_abstention" else int(rng.integers(1, cfg.risk_d_max + 1))
        g = random_tree(d, rng)
        opts = {}
        if kind == "ha_loss":
            opts = {"K_A": round(float(rng.uniform(0, 1)), 2), "K_Ac": round(float(rng.uniform(0, 1)), 2)}
        elif kind == "binary_abstention":
            opts = {"c_reject": round(float(rng.uniform(0, 0.5)), 2)}
        world = random_world(rng, kind, g, n_x=int(rng.integers(1, cfg.risk_max_x + 1)), **opts)
        key = (kind, tuple(g.edges()), tuple(sorted(opts.items())))
        if key not in tables:
            H, R = world.actions()
            tables[key] = loss_table(world.spec, H, R, world.labels)
        gstar = world.g_star()
        scale = float(rng.choice([1e-3, 1e-1, 1.0, 3.0]))
        G = gstar + scale * rng.normal(size=gstar.shape)
        out = risk_bound_check(world, G, table=tables[key])
        res.checked += 1
        if not out.holds:
            res.failures.append((kind, out.excess_risk, out.bound))
    if res.failures:
        res.status = FAIL
    return res


SUITES = {
    "loss-equality": loss_suite,
    "decoder-oracle": decoder_suite,
    "hloss-integrality": integrality_suite,
    "risk-bound": risk_suite,
}


def run_suites(cfg: VerifyConfig, names=None, spec_factory: Optional[SpecFactory] = None) -> list:
    out = []
    for name in names or SUITES:
        if name == "loss-equality":
            out.append(loss_suite(cfg, spec_factory))
        else:
            out.append(SUITES[name](cfg))
    return out


def format_report(results: list) -> str:
    lines = [r.line() for r in results]
    failed = any(r.status == FAIL for r in results)
    lines.append("overall: " + (FAIL if failed else PASS))
    return "\n".join(lines) + "\n"
