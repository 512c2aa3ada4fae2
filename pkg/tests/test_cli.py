import dataclasses
import json

import numpy as np
import pytest

from sola.cli import EXIT_CONFIG, EXIT_DATA, EXIT_MODEL, EXIT_OK, EXIT_VERIFY, main
from sola.io import read_dataset
from sola.losses import make_spec

FAST_VERIFY = {"loss_d_max": 3, "decoder_d_max": 4, "decoder_instances": 5,
               "integrality_d_max": 4, "integrality_instances": 10, "risk_d_max": 2,
               "risk_worlds": 20, "risk_max_x": 2}


def write_config(tmp_path, obj, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(tmp_path, command, cfg=None, *extra, out="out"):
    argv = [command, "--out", str(tmp_path / out)]
    if cfg is not None:
        argv += ["--config", write_config(tmp_path, cfg)]
    return main(argv + list(extra))


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = {"seed": 1, "synthetic": {"n_train": 80, "n_test": 20}, "lambda": 0.01,
           "loss": {"abstain_nodes": "aspects"}}
    cfg_path = write_config(tmp, cfg)
    out = tmp / "out"
    for cmd in ("gen", "train"):
        assert main([cmd, "--config", cfg_path, "--out", str(out)]) == EXIT_OK
    return tmp, cfg_path, out


class TestTrainDecode:
    def test_outputs(self, trained):
        _, _, out = trained
        summary = json.loads((out / "train_summary.json").read_text())
        assert summary["n_train"] == 80 and summary["surrogate_training_loss"] >= 0
        assert (out / "config.json").exists() and (out / "model.json").exists()

    def test_noiseless_recovery(self, trained):
        _, cfg_path, out = trained
        code = main(["decode", "--config", cfg_path, "--out", str(out),
                     "--input", str(out / "train.txt")])
        assert code == EXIT_OK
        _, Y = read_dataset(out / "train.txt")
        rows = (out / "predictions.txt").read_text().splitlines()
        assert len(rows) == len(Y)
        for row, y in zip(rows, Y):
            labels, obj, nodes = row.split("|")
            float(obj), int(nodes)
            assert labels == "".join(map(str, y))

    def test_abstention_symbol(self, tmp_path):
        cfg = {"seed": 4, "synthetic": {"n_train": 60, "n_test": 30, "noise": 0.3},
               "loss": {"K_A": 0.0, "K_Ac": 0.0, "abstain_nodes": "aspects"}}
        assert run(tmp_path, "train", cfg) == EXIT_OK
        assert run(tmp_path, "decode", cfg) == EXIT_OK
        rows = (tmp_path / "out" / "predictions.txt").read_text().splitlines()
        labels = [r.split("|")[0] for r in rows]
        assert any("a" in s for s in labels)
        assert all(set(s) <= {"0", "1", "a"} for s in labels)
        assert run(tmp_path, "decode", cfg, "--no-abstention") == EXIT_OK
        rows = (tmp_path / "out" / "predictions.txt").read_text().splitlines()
        assert not any("a" in r.split("|")[0] for r in rows)


class TestExitCodes:
    def test_lambda_zero(self, tmp_path):
        assert run(tmp_path, "train", {"lambda": 0}) == EXIT_CONFIG
        assert not (tmp_path / "out" / "model.json").exists()

    @pytest.mark.parametrize("cfg", [{"loss": {"K_A": -1}}, {"synthetic": {"noise": 0.5}},
                                     {"bogus": 1}, {"loss": {"kind": "nope"}}])
    def test_bad_values(self, tmp_path, cfg):
        assert run(tmp_path, "train", cfg) == EXIT_CONFIG

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{")
        assert main(["train", "--config", str(p), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_missing_data(self, tmp_path, capsys):
        assert run(tmp_path, "train", {"data": {"train": "missing.txt"}}) == EXIT_DATA
        assert "missing.txt" in capsys.readouterr().err

    def test_illegal_labels(self, tmp_path):
        (tmp_path / "bad.txt").write_text("0.1|0,1,0,0,0,0,0\n")
        assert run(tmp_path, "train", {"data": {"train": "bad.txt"}}) == EXIT_DATA

    def test_graph_mismatch(self, trained, tmp_path):
        _, _, out = trained
        cfg = {"graph": {"opinion_tree": {"n_aspects": 3, "n_polarities": 2}}}
        assert run(tmp_path, "decode", cfg, "--model", str(out / "model.json")) == EXIT_MODEL

    def test_missing_model(self, tmp_path):
        assert run(tmp_path, "decode", None, "--model", str(tmp_path / "m.json")) == EXIT_MODEL

    def test_feature_mismatch(self, trained, tmp_path):
        _, _, out = trained
        (tmp_path / "x.txt").write_text("0.1,0.2|0,0,0,0,0,0,0\n")
        code = run(tmp_path, "decode", None, "--model", str(out / "model.json"),
                   "--input", str(tmp_path / "x.txt"))
        assert code == EXIT_MODEL


class TestSweep:
    def test_default_grid(self, trained):
        _, cfg_path, out = trained
        assert main(["sweep", "--config", cfg_path, "--out", str(out)]) == EXIT_OK
        lines = (out / "curves.csv").read_text().splitlines()
        assert lines[0].startswith("K_A,K_Ac,") and len(lines) == 34
        keys = [tuple(map(float, l.split(",")[:2]))[::-1] for l in lines[1:]]
        assert keys == sorted(keys)

    def test_single_cell(self, trained, tmp_path):
        _, _, out = trained
        cfg = {"seed": 1, "synthetic": {"n_train": 80, "n_test": 20},
               "sweep": {"K_A": [0.1], "K_Ac": [0.5]}}
        assert run(tmp_path, "sweep", cfg, "--model", str(out / "model.json")) == EXIT_OK
        assert len((tmp_path / "out" / "curves.csv").read_text().splitlines()) == 2

    def test_reruns_identical(self, trained, tmp_path):
        _, cfg_path, out = trained
        texts = []
        for k in range(2):
            d = tmp_path / f"r{k}"
            assert main(["sweep", "--config", cfg_path, "--out", str(d), "--jobs", "2",
                         "--model", str(out / "model.json")]) == EXIT_OK
            texts.append((d / "curves.csv").read_bytes())
        assert texts[0] == texts[1]


def test_pipeline(tmp_path):
    cfg = {"graph": {"opinion_tree": {"n_aspects": 3, "n_polarities": 3}}, "seed": 2,
           "reviews": {"n_train": 40, "n_test": 20}, "loss": {"abstain_nodes": "aspects"}}
    assert run(tmp_path, "pipeline", cfg) == EXIT_OK
    report = json.loads((tmp_path / "out" / "pipeline.json").read_text())
    assert report["oracle_le_predicted"] is True
    assert set(report["macro"]) == {"oracle", "predicted", "abstention"}


def test_gen_writes_reviews(tmp_path):
    assert run(tmp_path, "gen", {"reviews": {"n_train": 5, "n_test": 3}}) == EXIT_OK
    names = {p.name for p in (tmp_path / "out").iterdir()}
    assert {"train.txt", "test.txt", "graph.json", "reviews_train.txt",
            "ratings_test.csv", "config.json"} <= names


def test_config_echoed_verbatim(tmp_path):
    text = '{"seed": 3,   "synthetic": {"n_train": 10, "n_test": 2}}\n'
    (tmp_path / "c.json").write_text(text)
    assert main(["gen", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "config.json").read_text() == text


class TestVerify:
    def test_passes(self, tmp_path, capsys):
        assert run(tmp_path, "verify", {"verify": FAST_VERIFY}) == EXIT_OK
        report = (tmp_path / "out" / "verify_report.txt").read_text()
        assert report.splitlines()[-1] == "overall: PASS"
        assert report == capsys.readouterr().out

    def test_wrong_C_entry_fails(self, tmp_path):
        def corrupt(kind, graph, **opts):
            spec = make_spec(kind, graph, **opts)
            C = spec.C.copy()
            C[0, 0] += 0.5
            return dataclasses.replace(spec, C=C)

        argv = ["verify", "--out", str(tmp_path / "out"),
                "--config", write_config(tmp_path, {"verify": FAST_VERIFY})]
        assert main(argv, spec_factory=corrupt) == EXIT_VERIFY
        lines = (tmp_path / "out" / "verify_report.txt").read_text().splitlines()
        assert lines[0].startswith("loss-equality: FAIL")
        assert lines[-1] == "overall: FAIL"

    def test_low_cap_skips(self, tmp_path):
        assert run(tmp_path, "verify", {"caps": {"d": 1}, "verify": FAST_VERIFY}) == EXIT_OK
        lines = (tmp_path / "out" / "verify_report.txt").read_text().splitlines()
        assert all(": SKIP" in l for l in lines[:-1]) and len(lines) == 5

    def test_reruns_identical(self, tmp_path):
        for k in range(2):
            assert run(tmp_path, "verify", {"verify": FAST_VERIFY}, out=f"v{k}") == EXIT_OK
        a, b = ((tmp_path / f"v{k}" / "verify_report.txt").read_bytes() for k in range(2))
        assert a == b

    def test_unknown_option(self, tmp_path):
        assert run(tmp_path, "verify", {"verify": {"nope": 1}}) == EXIT_CONFIG
