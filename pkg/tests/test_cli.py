"""End-to-end CLI behavior: artifacts, determinism, and exit codes."""

import json
import os

import numpy as np
import pytest

from surveybn.cli import main
from surveybn.inference import prior_marginal
from surveybn.jsonio import read_json
from surveybn.model import network_from_json


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(out), "--n", "600", "--seed", "7"]) == 0
    return out


@pytest.fixture(scope="module")
def learned_dir(tmp_path_factory, synth_dir):
    out = tmp_path_factory.mktemp("learned")
    assert (
        main(
            [
                "learn",
                "--data", str(synth_dir / "data.csv"),
                "--out", str(out),
                "--seed", "11",
                "--bootstraps", "7",
            ]
        )
        == 0
    )
    return out


def test_synth_writes_deterministic_files(tmp_path, capsys):
    code, out = run(capsys, "synth", "--out", str(tmp_path / "a"), "--n", "200", "--seed", "3")
    assert code == 0
    summary = json.loads(out)
    assert summary["rows"] == 200
    code, _ = run(capsys, "synth", "--out", str(tmp_path / "b"), "--n", "200", "--seed", "3")
    assert code == 0
    for name in ("data.csv", "generator.json", "cvrics.json"):
        assert read_bytes(tmp_path / "a" / name) == read_bytes(tmp_path / "b" / name)
    code, _ = run(capsys, "synth", "--out", str(tmp_path / "c"), "--n", "0", "--seed", "3")
    assert code == 2


def test_learn_outputs_and_rerun_byte_identical(tmp_path, capsys, synth_dir):
    args = [
        "learn",
        "--data", str(synth_dir / "data.csv"),
        "--out", str(tmp_path / "m1"),
        "--seed", "5",
        "--bootstraps", "3",
    ]
    assert main(args) == 0
    capsys.readouterr()
    args[4] = str(tmp_path / "m2")
    assert main(args) == 0
    capsys.readouterr()
    assert read_bytes(tmp_path / "m1" / "model.json") == read_bytes(tmp_path / "m2" / "model.json")
    assert read_bytes(tmp_path / "m1" / "ensemble.json") == read_bytes(
        tmp_path / "m2" / "ensemble.json"
    )


def test_query_empty_evidence_is_prior_marginal(capsys, learned_dir):
    model_path = str(learned_dir / "model.json")
    code, out = run(capsys, "query", "--model", model_path, "--target", "condom_use")
    assert code == 0
    doc = json.loads(out)
    net = network_from_json(read_json(model_path))
    prior = prior_marginal(net, net.variable_by_name("condom_use").index)
    assert doc["distribution"]["yes"] == pytest.approx(prior.distribution[1], abs=1e-12)
    assert doc["evidence"] == {}
    assert len(doc["model_fingerprint"]) == 64


def test_query_with_evidence_and_request_file(tmp_path, capsys, learned_dir):
    model_path = str(learned_dir / "model.json")
    code, flag_out = run(
        capsys, "query", "--model", model_path,
        "--target", "condom_use", "--evidence", "financial_literacy=yes",
    )
    assert code == 0
    request = tmp_path / "req.json"
    request.write_text(
        json.dumps(
            {
                "target": {"variable": "condom_use"},
                "evidence": {"financial_literacy": "yes"},
            }
        )
    )
    code, file_out = run(capsys, "query", "--model", model_path, "--request", str(request))
    assert code == 0
    assert flag_out == file_out


def test_whatif_zero_delta_for_equal_evidence(capsys, learned_dir):
    code, out = run(
        capsys, "whatif", "--model", str(learned_dir / "model.json"),
        "--target", "condom_use", "--state", "yes",
        "--baseline", "co_membership=yes", "--alternative", "co_membership=yes",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["delta"] == 0.0
    assert doc["baseline_probability"] == doc["alternative_probability"]


def test_domain_errors_exit_2(capsys, learned_dir):
    model_path = str(learned_dir / "model.json")
    code, _ = run(capsys, "query", "--model", model_path, "--target", "nope")
    assert code == 2
    code, _ = run(
        capsys, "query", "--model", model_path,
        "--target", "condom_use", "--evidence", "savings_account=maybe",
    )
    assert code == 2
    code, _ = run(
        capsys, "query", "--model", model_path,
        "--target", "condom_use", "--evidence", "not-a-pair",
    )
    assert code == 2


def test_missing_file_exits_3(capsys, tmp_path):
    code, _ = run(capsys, "query", "--model", str(tmp_path / "absent.json"), "--target", "x")
    assert code == 3


def test_usage_error_exits_1():
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--out", "somewhere"])  # --seed is mandatory
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 1


def test_cvrics_appends_column_and_histogram(tmp_path, capsys, synth_dir):
    out_csv = tmp_path / "scored.csv"
    code, out = run(
        capsys, "cvrics",
        "--data", str(synth_dir / "data.csv"),
        "--spec", str(synth_dir / "cvrics.json"),
        "--out", str(out_csv),
        "--bins", "0,7,12,31",
    )
    assert code == 0
    doc = json.loads(out)
    assert 0 <= doc["min"] <= doc["max"] <= 30
    assert sum(doc["histogram"]["counts"]) == doc["n"]
    header = out_csv.read_text().splitlines()[0]
    assert header.endswith(",cvrics")


def test_train_eval_flow_and_determinism(tmp_path, capsys, synth_dir):
    train_dir = tmp_path / "t1"
    code, out = run(
        capsys, "train",
        "--data", str(synth_dir / "data.csv"),
        "--label", "condom_use",
        "--out", str(train_dir),
        "--seed", "19",
        "--kind", "forest",
        "--trees", "10",
    )
    assert code == 0
    summary = json.loads(out)
    assert os.path.exists(summary["model"])
    assert os.path.exists(summary["test"])

    metrics_path = tmp_path / "metrics.json"
    code, out = run(
        capsys, "eval",
        "--model", summary["model"],
        "--test", summary["test"],
        "--out", str(metrics_path),
        "--seed", "23",
        "--bootstraps", "50",
    )
    assert code == 0
    doc = json.loads(out)
    assert set(doc["metrics"]) == {
        "accuracy", "f1", "sensitivity", "specificity", "au_roc", "au_prc"
    }
    for entry in doc["metrics"].values():
        lo, hi = entry["ci"]
        assert 0.0 <= lo <= entry["point"] <= hi <= 1.0

    # identical flags -> byte-identical artifacts
    train_dir2 = tmp_path / "t2"
    assert main([
        "train", "--data", str(synth_dir / "data.csv"), "--label", "condom_use",
        "--out", str(train_dir2), "--seed", "19", "--kind", "forest", "--trees", "10",
    ]) == 0
    capsys.readouterr()
    assert read_bytes(train_dir / "model_forest.json") == read_bytes(
        train_dir2 / "model_forest.json"
    )
    assert read_bytes(train_dir / "test.csv") == read_bytes(train_dir2 / "test.csv")


def test_learn_respects_constraints_file(tmp_path, capsys, synth_dir):
    constraints = tmp_path / "cons.json"
    constraints.write_text(
        json.dumps({"forbidden": [["financial_literacy", "condom_use"],
                                  ["condom_use", "financial_literacy"]]})
    )
    out = tmp_path / "constrained"
    assert main([
        "learn", "--data", str(synth_dir / "data.csv"), "--out", str(out),
        "--seed", "3", "--bootstraps", "3", "--constraints", str(constraints),
    ]) == 0
    capsys.readouterr()
    ensemble = read_json(out / "ensemble.json")
    for edge in ensemble["edges"]:
        assert {edge["from"], edge["to"]} != {"financial_literacy", "condom_use"}
