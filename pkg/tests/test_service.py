"""HTTP service endpoints: payload contracts, error mapping, CLI parity."""

import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from surveybn.api import fingerprint_file
from surveybn.cli import main
from surveybn.jsonio import canonical_dumps, read_json
from surveybn.model import (
    BayesianNetwork,
    Cpt,
    Dag,
    VariableSpec,
    network_from_json,
    network_to_json,
)
from surveybn.service import create_app


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("svc")
    assert main(["synth", "--out", str(out), "--n", "500", "--seed", "29"]) == 0
    assert main([
        "learn", "--data", str(out / "data.csv"), "--out", str(out),
        "--seed", "31", "--bootstraps", "5",
    ]) == 0
    return out


@pytest.fixture(scope="module")
def client(artifacts):
    app = create_app(str(artifacts / "model.json"), str(artifacts / "ensemble.json"))
    with TestClient(app) as c:
        yield c


def deterministic_model_path(tmp_path):
    """A network containing structural zeros so evidence can be impossible."""
    variables = (
        VariableSpec("a", ("0", "1"), 0),
        VariableSpec("b", ("0", "1"), 1),
        VariableSpec("c", ("0", "1"), 2),
    )
    dag = Dag(3, ((0, 1),))
    cpts = (
        Cpt(0, (), np.array([[0.5, 0.5]])),
        Cpt(1, (0,), np.array([[1.0, 0.0], [0.0, 1.0]])),
        Cpt(2, (), np.array([[0.5, 0.5]])),
    )
    net = BayesianNetwork(variables, dag, cpts)
    path = tmp_path / "det.json"
    path.write_text(canonical_dumps(network_to_json(net)))
    return str(path)


def test_healthz_reports_fingerprint(client, artifacts):
    resp = client.get("/healthz")
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["status"] == "ok"
    assert doc["model_fingerprint"] == fingerprint_file(str(artifacts / "model.json"))


def test_variables_payload_matches_model(client, artifacts):
    resp = client.get("/variables")
    assert resp.status_code == 200
    doc = resp.json()
    net = network_from_json(read_json(str(artifacts / "model.json")))
    assert [v["name"] for v in doc["variables"]] == [v.name for v in net.variables]
    for entry, var in zip(doc["variables"], net.variables):
        assert entry["states"] == list(var.states)


def test_graph_payload_edges_and_frequencies(client, artifacts):
    resp = client.get("/graph")
    assert resp.status_code == 200
    doc = resp.json()
    net = network_from_json(read_json(str(artifacts / "model.json")))
    assert len(doc["edges"]) == len(net.dag.edges)
    for edge in doc["edges"]:
        assert edge["frequency"] is None or 0.0 <= edge["frequency"] <= 1.0


def test_query_matches_cli_bytes(client, artifacts, capsys):
    body = {"target": {"variable": "condom_use"},
            "evidence": {"savings_account": "yes"}}
    resp = client.post("/query", content=json.dumps(body))
    assert resp.status_code == 200

    request_path = artifacts / "parity_query.json"
    request_path.write_text(json.dumps(body))
    assert main([
        "query", "--model", str(artifacts / "model.json"),
        "--request", str(request_path),
    ]) == 0
    cli_out = capsys.readouterr().out
    assert resp.content == cli_out.encode("utf-8")


def test_whatif_matches_cli_bytes(client, artifacts, capsys):
    body = {
        "target": {"variable": "condom_use", "state": "yes"},
        "baseline": {},
        "alternative": {"financial_literacy": "yes"},
    }
    resp = client.post("/whatif", content=json.dumps(body))
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["delta"] == pytest.approx(
        doc["alternative_probability"] - doc["baseline_probability"], abs=1e-15
    )

    request_path = artifacts / "parity_whatif.json"
    request_path.write_text(json.dumps(body))
    assert main([
        "whatif", "--model", str(artifacts / "model.json"),
        "--request", str(request_path),
    ]) == 0
    cli_out = capsys.readouterr().out
    assert resp.content == cli_out.encode("utf-8")


def test_query_distribution_sums_to_one(client):
    resp = client.post("/query", content=json.dumps({
        "target": {"variable": "hiv_test"},
        "evidence": {"co_membership": "no", "depression": "yes"},
    }))
    assert resp.status_code == 200
    doc = resp.json()
    assert sum(doc["distribution"].values()) == pytest.approx(1.0, abs=1e-9)
    assert 0.0 <= doc["evidence_probability"] <= 1.0


def test_error_codes_and_shapes(client):
    cases = [
        ({"target": {"variable": "ghost"}, "evidence": {}}, 400, "unknown_variable"),
        ({"target": {"variable": "condom_use"},
          "evidence": {"savings_account": "sometimes"}}, 400, "unknown_state"),
        ({"evidence": {}}, 400, "malformed_request"),
        ({"target": {"variable": "condom_use"}, "evidence": {},
          "extra": 1}, 400, "malformed_request"),
    ]
    for body, status, code in cases:
        resp = client.post("/query", content=json.dumps(body))
        assert resp.status_code == status
        doc = resp.json()
        assert doc["code"] == code
        assert set(doc) == {"code", "message", "detail"}


def test_missing_evidence_key_means_empty_evidence(client):
    explicit = client.post("/query", content=json.dumps(
        {"target": {"variable": "condom_use"}, "evidence": {}}))
    omitted = client.post("/query", content=json.dumps(
        {"target": {"variable": "condom_use"}}))
    assert explicit.status_code == omitted.status_code == 200
    assert explicit.content == omitted.content


def test_non_json_body_is_malformed(client):
    resp = client.post("/query", content=b"{not json")
    assert resp.status_code == 400
    assert resp.json()["code"] == "malformed_request"
    resp = client.post("/query", content=json.dumps([1, 2]))
    assert resp.status_code == 400
    assert resp.json()["code"] == "malformed_request"


def test_impossible_evidence_maps_to_422(tmp_path):
    app = create_app(deterministic_model_path(tmp_path))
    with TestClient(app) as client:
        resp = client.post("/query", content=json.dumps({
            "target": {"variable": "c"},
            "evidence": {"a": "0", "b": "1"},
        }))
        assert resp.status_code == 422
        doc = resp.json()
        assert doc["code"] == "impossible_evidence"
        assert "a" in doc["message"] or "a" in json.dumps(doc["detail"])


def test_concurrent_identical_queries_identical_bodies(client):
    body = json.dumps({"target": {"variable": "self_efficacy"},
                       "evidence": {"depression": "no"}})

    def hit(_):
        return client.post("/query", content=body).content

    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(hit, range(40)))
    assert all(r == results[0] for r in results)


def test_unknown_route_is_404_not_500(client):
    assert client.get("/nope").status_code == 404
