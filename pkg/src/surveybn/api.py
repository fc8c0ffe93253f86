"""Shared query handling for the CLI and the HTTP service.

Both front ends accept the same JSON request shapes and must return identical
response documents, so all validation and response assembly lives here. Every
response echoes the model file's content hash so callers can detect which
artifact answered them.
"""

from __future__ import annotations

import hashlib
from typing import Mapping

from .errors import MalformedRequest
from .inference import intervention_delta, posterior
from .model import BayesianNetwork, EvidenceSet
from .structure import EnsembleSummary


def fingerprint_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fingerprint_file(path) -> str:
    with open(path, "rb") as fh:
        return fingerprint_bytes(fh.read())


def _require_mapping(doc, what: str) -> Mapping:
    if not isinstance(doc, Mapping):
        raise MalformedRequest(f"{what} must be a JSON object, got {type(doc).__name__}")
    return doc


def parse_evidence(net: BayesianNetwork, doc, what: str = "evidence") -> EvidenceSet:
    """{variable name: state label} -> EvidenceSet, validating both."""
    doc = _require_mapping(doc if doc is not None else {}, what)
    items = []
    for name, label in doc.items():
        if not isinstance(name, str) or not isinstance(label, str):
            raise MalformedRequest(f"{what} entries must map string names to string states")
        var = net.variable_by_name(name)
        items.append((var.index, var.state_index(label)))
    return EvidenceSet(tuple(items))


def _parse_target(net: BayesianNetwork, doc, require_state: bool):
    doc = _require_mapping(doc, "target")
    name = doc.get("variable")
    if not isinstance(name, str):
        raise MalformedRequest("target.variable must be a string")
    var = net.variable_by_name(name)
    if not require_state:
        if "state" in doc and doc["state"] is not None:
            return var, var.state_index(str(doc["state"]))
        return var, None
    label = doc.get("state")
    if not isinstance(label, str):
        raise MalformedRequest("target.state must be a string")
    return var, var.state_index(label)


def _evidence_names(net: BayesianNetwork, evidence: EvidenceSet) -> dict[str, str]:
    return {
        net.variables[v].name: net.variables[v].states[s] for v, s in evidence.items
    }


def handle_query(net: BayesianNetwork, fingerprint: str, request) -> dict:
    """POST /query and `query` subcommand: posterior of a target variable."""
    request = _require_mapping(request, "request")
    unknown = set(request) - {"target", "evidence"}
    if unknown:
        raise MalformedRequest(f"unexpected request fields: {sorted(unknown)}")
    if "target" not in request:
        raise MalformedRequest("request needs a target")
    var, _ = _parse_target(net, request["target"], require_state=False)
    evidence = parse_evidence(net, request.get("evidence"))
    result = posterior(net, var.index, evidence)
    return {
        "target": var.name,
        "states": list(var.states),
        "distribution": {
            state: float(p) for state, p in zip(var.states, result.distribution)
        },
        "evidence": _evidence_names(net, evidence),
        "evidence_probability": float(result.evidence_probability),
        "model_fingerprint": fingerprint,
    }


def handle_whatif(net: BayesianNetwork, fingerprint: str, request) -> dict:
    """POST /whatif and `whatif` subcommand: delta between two evidence settings."""
    request = _require_mapping(request, "request")
    unknown = set(request) - {"target", "baseline", "alternative"}
    if unknown:
        raise MalformedRequest(f"unexpected request fields: {sorted(unknown)}")
    for key in ("target", "baseline", "alternative"):
        if key not in request:
            raise MalformedRequest(f"request needs {key}")
    var, state = _parse_target(net, request["target"], require_state=True)
    baseline = parse_evidence(net, request["baseline"], "baseline")
    alternative = parse_evidence(net, request["alternative"], "alternative")
    result = intervention_delta(net, var.index, state, baseline, alternative)
    return {
        "target": {"variable": var.name, "state": var.states[state]},
        "baseline_evidence": _evidence_names(net, baseline),
        "alternative_evidence": _evidence_names(net, alternative),
        "baseline_probability": float(result.baseline_prob),
        "alternative_probability": float(result.alternative_prob),
        "delta": float(result.delta),
        "model_fingerprint": fingerprint,
    }


def variables_payload(net: BayesianNetwork, fingerprint: str) -> dict:
    return {
        "variables": [
            {"name": v.name, "states": list(v.states)} for v in net.variables
        ],
        "model_fingerprint": fingerprint,
    }


def graph_payload(
    net: BayesianNetwork, summary: EnsembleSummary | None, fingerprint: str
) -> dict:
    """Model edges annotated with their ensemble vote frequencies."""
    edges = []
    for p, c in net.dag.sorted_edges():
        freq = summary.frequency(p, c) if summary is not None else None
        edges.append(
            {
                "from": net.variables[p].name,
                "to": net.variables[c].name,
                "frequency": freq,
            }
        )
    return {
        "nodes": [v.name for v in net.variables],
        "edges": edges,
        "model_fingerprint": fingerprint,
    }
