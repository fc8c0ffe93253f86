#!/usr/bin/env python3
"""Capture UI test fixtures from the real model service.

Replays the scripted evidence interactions the TypeScript parity test drives,
records every request/response pair verbatim, and writes them under
frontend/fixtures/. Regenerate after changing the demo model:

    python3 frontend/scripts/capture-fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from surveybn.service import create_app

FRONTEND = Path(__file__).resolve().parent.parent
DEMO = FRONTEND / "demo"
FIXTURES = FRONTEND / "fixtures"

# Must match the action list in test/parity.test.ts step for step.
ACTIONS = [
    {"kind": "target", "variable": "condom_use"},
    {"kind": "set", "variable": "savings_account", "state": "yes"},
    {"kind": "set", "variable": "depression", "state": "yes"},
    {"kind": "set", "variable": "co_membership", "state": "no"},
    {"kind": "clear", "variable": "depression"},
    {"kind": "pin"},
    {"kind": "set", "variable": "legal_training", "state": "yes"},
    {"kind": "set", "variable": "hiv_test", "state": "no"},
    {"kind": "clearAll"},
    {"kind": "target", "variable": "hiv_test"},
    {"kind": "set", "variable": "savings_account", "state": "yes"},
    {"kind": "set", "variable": "legal_training", "state": "yes"},
    {"kind": "pin"},
    {"kind": "set", "variable": "savings_account", "state": "no"},
    {"kind": "clear", "variable": "legal_training"},
    {"kind": "target", "variable": "condom_use"},
    {"kind": "clearAll"},
    {"kind": "set", "variable": "financial_literacy", "state": "no"},
    {"kind": "pin"},
    {"kind": "set", "variable": "financial_literacy", "state": "yes"},
]


class MirrorSession:
    """Mirror of src/state.ts transitions, just enough to drive the capture."""

    def __init__(self, variables):
        self.states = {v["name"]: v["states"] for v in variables}
        self.evidence = {}
        self.baseline = {}
        self.target = None
        self.target_state = None

    def apply(self, action):
        kind = action["kind"]
        if kind == "target":
            name = action["variable"]
            self.target = name
            self.target_state = action.get("state", self.states[name][-1])
            self.evidence.pop(name, None)
            self.baseline.pop(name, None)
        elif kind == "set":
            assert action["variable"] != self.target
            assert action["state"] in self.states[action["variable"]]
            self.evidence[action["variable"]] = action["state"]
        elif kind == "clear":
            self.evidence.pop(action["variable"], None)
        elif kind == "clearAll":
            self.evidence = {}
        elif kind == "pin":
            self.baseline = dict(self.evidence)
        else:
            raise ValueError(f"unknown action kind {kind}")

    def query_request(self):
        return {"target": {"variable": self.target}, "evidence": dict(self.evidence)}

    def whatif_request(self):
        return {
            "target": {"variable": self.target, "state": self.target_state},
            "baseline": dict(self.baseline),
            "alternative": dict(self.evidence),
        }


def post(client, path, body):
    resp = client.post(path, content=json.dumps(body))
    resp.raise_for_status()
    return resp.json()


def main():
    app = create_app(str(DEMO / "model.json"), str(DEMO / "ensemble.json"))
    FIXTURES.mkdir(exist_ok=True)
    with TestClient(app) as client:
        variables = client.get("/variables").json()
        graph = client.get("/graph").json()

        session = MirrorSession(variables["variables"])
        steps = []
        for action in ACTIONS:
            session.apply(action)
            query_request = session.query_request()
            whatif_request = session.whatif_request()
            steps.append(
                {
                    "action": action,
                    "query": {
                        "request": query_request,
                        "response": post(client, "/query", query_request),
                    },
                    "whatif": {
                        "request": whatif_request,
                        "response": post(client, "/whatif", whatif_request),
                    },
                }
            )

        # standalone prior-marginal capture for the clear-all identity check
        prior_request = {"target": {"variable": "condom_use"}, "evidence": {}}
        prior = post(client, "/query", prior_request)

    def dump(name, doc):
        with open(FIXTURES / name, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    dump("variables.json", variables)
    dump("graph.json", graph)
    dump(
        "parity.json",
        {
            "model_fingerprint": variables["model_fingerprint"],
            "prior": {"request": prior_request, "response": prior},
            "steps": steps,
        },
    )
    print(f"wrote {len(steps)} steps to {FIXTURES / 'parity.json'}")


if __name__ == "__main__":
    main()
