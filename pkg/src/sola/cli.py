"""Command-line entry point.

Subcommands: ``gen``, ``train``, ``decode``, ``sweep``, ``pipeline``, ``verify``.
Every run reads one JSON config (optional; defaults describe a small
synthetic opinion tree), echoes it verbatim into the output directory and
writes its results atomically.  Exit codes: 0 ok, 2 config error, 3 data
error, 4 model error, 5 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .decode import decode_features
from .estimator import AbstentionStructuredPredictor, check_labels
from .exceptions import SolaError
from .experiments.pipeline import star_pipeline
from .experiments.sweep import DEFAULT_K_A, DEFAULT_K_AC, sweep_abstention
from .experiments.synthetic import (SyntheticConfig, opinion_shape, opinion_tree, synth_dataset,
                                    synth_reviews)
from .hexgraph import CONSECUTIVE_RULES, HexGraph, load_graph
from .io import (DataFormatError, atomic_write, dump_json, read_dataset, read_reviews,
                 write_dataset, write_reviews)
from .losses import KINDS
from .surrogate import KERNELS
from .verify import FAIL, VerifyConfig, format_report, run_suites

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_MODEL, EXIT_VERIFY = 0, 2, 3, 4, 5


class ConfigError(SolaError):
    pass


class DataError(SolaError):
    pass


class ModelError(SolaError):
    pass


@dataclass
class RunConfig:
    """Validated run settings; paths are resolved against the config file's directory."""

    raw: dict
    base: Path
    seed: int = 0
    graph: Optional[HexGraph] = None
    loss: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)
    lam: float = 0.1
    strict: bool = False
    data: dict = field(default_factory=dict)
    synthetic: dict = field(default_factory=dict)
    reviews: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    d_cap: int = 10
    verify_config: Optional[VerifyConfig] = None

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base / p


_LOSS_DEFAULTS = {"kind": "ha_loss", "c": None, "K_A": 0.2, "K_Ac": 0.5, "c_reject": 0.25,
                  "consecutive": "purpose", "abstain_nodes": None}
_SYNTH_DEFAULTS = {"n_train": 200, "n_test": 100, "feature_dim": 20, "noise": 0.0,
                   "hard_nodes": [], "hard_noise": 0.35, "active_prob": 0.3, "jitter": 0.05}


def _merge(defaults: dict, given, section: str) -> dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"'{section}' must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")
    return {**defaults, **given}


def _graph_from(entry, base: Path) -> HexGraph:
    try:
        if entry is None:
            return opinion_tree(2, 2)
        if isinstance(entry, str):
            p = Path(entry) if Path(entry).is_absolute() else base / entry
            if not p.exists():
                raise ConfigError(f"graph file not found: {p}")
            return load_graph(p)
        if isinstance(entry, dict) and "opinion_tree" in entry:
            spec = entry["opinion_tree"]
            return opinion_tree(int(spec["n_aspects"]), int(spec["n_polarities"]),
                                bool(spec.get("exclusive_polarities", True)))
        if isinstance(entry, dict):
            return HexGraph.from_dict(entry)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"invalid graph: {exc}") from exc
    raise ConfigError("graph must be a path, an inline graph or an opinion_tree block")


def parse_config(raw: dict, base: Path, seed: Optional[int] = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {"seed", "graph", "loss", "kernel", "lambda", "strict", "data", "synthetic",
             "reviews", "sweep", "verify", "caps"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(raw, base)
    cfg.seed = int(raw.get("seed", 0) if seed is None else seed)
    cfg.graph = _graph_from(raw.get("graph"), base)
    cfg.loss = _merge(_LOSS_DEFAULTS, raw.get("loss"), "loss")
    cfg.kernel = _merge({"kind": "gaussian", "gamma": 0.5}, raw.get("kernel"), "kernel")
    cfg.lam = raw.get("lambda", 0.1)
    cfg.strict = bool(raw.get("strict", False))
    cfg.data = _merge({"train": None, "test": None}, raw.get("data"), "data")
    cfg.synthetic = _merge(_SYNTH_DEFAULTS, raw.get("synthetic"), "synthetic")
    cfg.reviews = _merge({"n_train": 120, "n_test": 60, "n_overall": None, "sentences": [3, 8],
                          "agreement": 0.8, "train": None, "train_ratings": None,
                          "test": None, "test_ratings": None, "alpha": 1.0},
                         raw.get("reviews"), "reviews")
    cfg.sweep = _merge({"K_A": list(DEFAULT_K_A), "K_Ac": list(DEFAULT_K_AC),
                        "abstain_nodes": None}, raw.get("sweep"), "sweep")
    cfg.verify = raw.get("verify") or {}
    caps = _merge({"d": 10}, raw.get("caps"), "caps")
    cfg.d_cap = caps["d"]
    _validate(cfg)
    return cfg


def _number(v, name, lo=None, lo_strict=False, hi=None, hi_strict=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(f"{name} must be a finite number")
    if lo is not None and (v <= lo if lo_strict else v < lo):
        raise ConfigError(f"{name} must be {'>' if lo_strict else '>='} {lo}, got {v}")
    if hi is not None and (v >= hi if hi_strict else v > hi):
        raise ConfigError(f"{name} must be {'<' if hi_strict else '<='} {hi}, got {v}")


def _validate(cfg: RunConfig) -> None:
    loss = cfg.loss
    if loss["kind"] not in KINDS:
        raise ConfigError(f"loss.kind must be one of {KINDS}")
    if loss["consecutive"] not in CONSECUTIVE_RULES:
        raise ConfigError(f"loss.consecutive must be one of {CONSECUTIVE_RULES}")
    _number(loss["K_A"], "loss.K_A", lo=0)
    _number(loss["K_Ac"], "loss.K_Ac", lo=0)
    _number(loss["c_reject"], "loss.c_reject", lo=0, hi=0.5)
    if cfg.kernel["kind"] not in KERNELS:
        raise ConfigError(f"kernel.kind must be one of {KERNELS}")
    _number(cfg.kernel["gamma"], "kernel.gamma", lo=0, lo_strict=True)
    _number(cfg.lam, "lambda", lo=0, lo_strict=True)
    syn = cfg.synthetic
    _number(syn["noise"], "synthetic.noise", lo=0, hi=0.5, hi_strict=True)
    _number(syn["hard_noise"], "synthetic.hard_noise", lo=0, hi=0.5, hi_strict=True)
    _number(syn["active_prob"], "synthetic.active_prob", lo=0, hi=1)
    for key in ("n_train", "n_test", "feature_dim"):
        if not isinstance(syn[key], int) or syn[key] < (1 if key == "feature_dim" else 0):
            raise ConfigError(f"synthetic.{key} must be a non-negative integer")
    if any(not 0 <= int(i) < cfg.graph.d for i in syn["hard_nodes"]):
        raise ConfigError("synthetic.hard_nodes out of range")
    for key in ("K_A", "K_Ac"):
        grid = cfg.sweep[key]
        if not isinstance(grid, list) or not grid:
            raise ConfigError(f"sweep.{key} must be a non-empty list")
        for v in grid:
            _number(v, f"sweep.{key}", lo=0)
    if not isinstance(cfg.d_cap, int) or cfg.d_cap < 0:
        raise ConfigError("caps.d must be a non-negative integer")
    try:
        cfg.verify_config = VerifyConfig.from_dict({**cfg.verify, "seed": cfg.seed,
                                                    "d_cap": cfg.d_cap})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Optional[str], seed: Optional[int] = None):
    """Return ``(RunConfig, verbatim text)``; without a path the defaults are used."""
    if path is None:
        return parse_config({}, Path.cwd(), seed), "{}\n"
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    return parse_config(raw, p.parent.resolve(), seed), text


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------
def synthetic_config(cfg: RunConfig) -> SyntheticConfig:
    s = cfg.synthetic
    return SyntheticConfig(cfg.graph, n_train=s["n_train"], n_test=s["n_test"],
                           feature_dim=s["feature_dim"], noise=s["noise"],
                           hard_nodes=tuple(s["hard_nodes"]), hard_noise=s["hard_noise"],
                           active_prob=s["active_prob"], jitter=s["jitter"], seed=cfg.seed)


def _read_labeled(cfg: RunConfig, path) -> tuple:
    p = cfg.path(path)
    try:
        X, Y = read_dataset(p)
        Y = check_labels(cfg.graph, Y)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    except ValueError as exc:
        raise DataError(f"{p}: {exc}") from exc
    return X, Y


def load_split(cfg: RunConfig, which: str) -> tuple:
    """Train or test data: from the configured file, else the synthetic generator."""
    if cfg.data[which] is not None:
        return _read_labeled(cfg, cfg.data[which])
    train, test = synth_dataset(synthetic_config(cfg))
    return train if which == "train" else test


def make_estimator(cfg: RunConfig, graph: Optional[HexGraph] = None) -> AbstentionStructuredPredictor:
    loss = cfg.loss
    return AbstentionStructuredPredictor(
        graph=graph or cfg.graph, loss=loss["kind"], K_A=loss["K_A"], K_Ac=loss["K_Ac"],
        c=loss["c"], c_reject=loss["c_reject"], consecutive=loss["consecutive"],
        strict=cfg.strict, abstain_nodes=_abstain_nodes(cfg, loss["abstain_nodes"]),
        kernel=cfg.kernel["kind"], gamma=cfg.kernel["gamma"], lam=cfg.lam)


def _abstain_nodes(cfg: RunConfig, entry):
    if entry is None:
        return None
    if entry == "aspects":
        n_aspects, _ = opinion_shape(cfg.graph)
        return tuple(range(1, n_aspects + 1))
    if isinstance(entry, list) and all(isinstance(i, int) and 0 <= i < cfg.graph.d for i in entry):
        return tuple(entry)
    raise ConfigError("abstain_nodes must be null, 'aspects' or a list of node indices")


def load_model(path) -> AbstentionStructuredPredictor:
    p = Path(path)
    if not p.exists():
        raise ModelError(f"model file not found: {p}")
    try:
        return AbstentionStructuredPredictor.from_dict(json.loads(p.read_text()))
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelError(f"{p}: {exc}") from exc


def _check_inputs(model, X):
    if X.shape[1] != model.n_features_in_:
        raise ModelError(f"model expects {model.n_features_in_} features, input has {X.shape[1]}")


def _echo(out: Path, text: str) -> None:
    atomic_write(out / "config.json", text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_gen(cfg: RunConfig, out: Path, args) -> int:
    (Xtr, Ytr), (Xte, Yte) = synth_dataset(synthetic_config(cfg))
    write_dataset(out / "train.txt", Xtr, Ytr)
    write_dataset(out / "test.txt", Xte, Yte)
    atomic_write(out / "graph.json", dump_json(cfg.graph.to_dict()))
    if cfg.raw.get("reviews") is not None:
        tr, te = _synth_reviews(cfg)
        write_reviews(out / "reviews_train.txt", out / "ratings_train.csv", tr)
        write_reviews(out / "reviews_test.txt", out / "ratings_test.csv", te)
    return EXIT_OK


def cmd_train(cfg: RunConfig, out: Path, args) -> int:
    X, Y = load_split(cfg, "train")
    model = make_estimator(cfg)
    try:
        model.fit(X, Y)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    resid = model.g_hat(X) - model.surrogate_.Psi_fit_
    summary = {
        "n_train": int(len(X)),
        "n_features": int(X.shape[1]),
        "d": int(cfg.graph.d),
        "q": int(model.spec_.q),
        "loss": cfg.loss["kind"],
        "seed": cfg.seed,
        "surrogate_training_loss": float(np.mean(np.sum(resid ** 2, axis=1))),
        "ridge_objective": model.surrogate_.objective(),
    }
    atomic_write(out / "model.json", dump_json(model.to_dict()))
    atomic_write(out / "train_summary.json", dump_json(summary))
    return EXIT_OK


def _model_for(cfg: RunConfig, args, out: Path) -> AbstentionStructuredPredictor:
    model = load_model(args.model or out / "model.json")
    if cfg.raw.get("graph") is not None and model.graph.d != cfg.graph.d:
        raise ModelError(f"model graph has {model.graph.d} nodes, config graph has {cfg.graph.d}")
    if args.strict:
        model.set_params(strict=True)
    return model


def cmd_decode(cfg: RunConfig, out: Path, args) -> int:
    model = _model_for(cfg, args, out)
    if args.input is not None:
        try:
            X, _ = read_dataset(args.input)
        except FileNotFoundError as exc:
            raise DataError(str(exc)) from exc
        except ValueError as exc:
            raise DataError(f"{args.input}: {exc}") from exc
    else:
        X, _ = load_split(cfg, "test")
    _check_inputs(model, X)
    spec = model.spec_
    space = spec.prediction_space(strict=model.strict, abstain_nodes=model.abstain_nodes)
    if args.no_abstention:
        space = space.without_abstention()
    lines = []
    for psi in model.g_hat(X):
        rep = decode_features(spec, space, psi, model.warm_start)
        lines.append(f"{rep.optimum.render()}|{rep.objective_value:.12g}|{rep.nodes_explored}")
    atomic_write(out / "predictions.txt", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    model = _model_for(cfg, args, out)
    if model.loss != "ha_loss":
        raise ModelError("sweeps need a model trained with the ha_loss")
    X, Y = load_split(cfg, "test")
    _check_inputs(model, X)
    abstain = _abstain_nodes(cfg, cfg.sweep["abstain_nodes"])
    res = sweep_abstention(model, (X, Y), cfg.sweep["K_A"], cfg.sweep["K_Ac"],
                           strict=model.strict, abstain_nodes=abstain, n_jobs=args.jobs)
    atomic_write(out / "curves.csv", res.to_csv())
    return EXIT_OK


def _synth_reviews(cfg: RunConfig):
    r = cfg.reviews
    n_aspects, _ = opinion_shape(cfg.graph)
    n_overall = r["n_overall"] or min(5, n_aspects)
    base = synthetic_config(cfg)
    kw = dict(sentences=tuple(r["sentences"]), n_overall=n_overall, agreement=r["agreement"])
    return (synth_reviews(base, r["n_train"], offset=0, **kw),
            synth_reviews(base, r["n_test"], offset=r["n_train"], **kw))


def cmd_pipeline(cfg: RunConfig, out: Path, args) -> int:
    r = cfg.reviews
    if r["train"] is not None:
        try:
            train = read_reviews(cfg.path(r["train"]), cfg.path(r["train_ratings"]))
            test = read_reviews(cfg.path(r["test"]), cfg.path(r["test_ratings"]))
            check_labels(cfg.graph, train.Y)
            check_labels(cfg.graph, test.Y)
        except (FileNotFoundError, TypeError, DataFormatError, ValueError) as exc:
            raise DataError(str(exc)) from exc
    else:
        train, test = _synth_reviews(cfg)
    model = make_estimator(cfg)
    if args.no_abstention:
        model.set_params(abstain_nodes=())
    model.fit(train.X, train.Y)
    try:
        res = star_pipeline(train, test, model, alpha=r["alpha"])
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    report = res.to_dict()
    report["oracle_le_predicted"] = bool(res.macro["oracle"] <= res.macro["predicted"])
    atomic_write(out / "pipeline.json", dump_json(report))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path, args, spec_factory=None) -> int:
    results = run_suites(cfg.verify_config, spec_factory=spec_factory)
    report = format_report(results)
    atomic_write(out / "verify_report.txt", report)
    sys.stdout.write(report)
    return EXIT_VERIFY if any(r.status == FAIL for r in results) else EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "decode": cmd_decode,
    "sweep": cmd_sweep,
    "pipeline": cmd_pipeline,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sola", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--no-abstention", action="store_true", help="decode with r fixed to 1")
        p.add_argument("--strict", action="store_true", help="require h[child] <= h[parent]")
        p.add_argument("--out", default="out", help="output directory")
        if name in ("decode", "sweep"):
            p.add_argument("--model", help="model file (default: OUT/model.json)")
        if name == "decode":
            p.add_argument("--input", help="data file to decode (default: configured test set)")
    return parser


def main(argv=None, spec_factory=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg, text = load_config(args.config, args.seed)
        if args.strict:
            cfg.strict = True
        out = Path(args.out)
        if args.command == "verify":
            code = cmd_verify(cfg, out, args, spec_factory)
        else:
            code = COMMANDS[args.command](cfg, out, args)
        _echo(out, text)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
