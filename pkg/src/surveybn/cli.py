"""Command-line front end for the survey-network pipeline.

Subcommands: synth, learn, query, whatif, cvrics, train, eval, serve.
Every command is a pure function of its input files, flags, and seed, so
repeated runs write byte-identical artifacts.

Exit codes: 0 success, 1 usage, 2 domain error (bad data, impossible
evidence, unknown names), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import api, classify, dataset, inference, model, structure, synth
from .errors import MalformedRequest, SurveyBnError
from .jsonio import canonical_dumps, read_json, write_json
from .rng import derive_seed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """argparse uses exit code 2 for usage errors; this CLI reserves 2 for
    domain errors, so usage failures are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(doc: dict) -> None:
    sys.stdout.write(canonical_dumps(doc))


def _parse_assignments(pairs: list[str], what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise MalformedRequest(f"{what} entry {pair!r} is not of the form var=state")
        name, label = pair.split("=", 1)
        out[name] = label
    return out


def _load_model(path: str) -> tuple[model.BayesianNetwork, str]:
    return model.network_from_json(read_json(path)), api.fingerprint_file(path)


def cmd_synth(args) -> int:
    net = synth.generator_network()
    table = model.forward_sample(net, args.n, args.seed)
    os.makedirs(args.out, exist_ok=True)
    data_path = os.path.join(args.out, "data.csv")
    generator_path = os.path.join(args.out, "generator.json")
    cvrics_path = os.path.join(args.out, "cvrics.json")
    dataset.save_table(table, data_path)
    write_json(generator_path, model.network_to_json(net))
    write_json(cvrics_path, synth.generator_cvrics_spec().to_json())
    _emit(
        {
            "data": data_path,
            "generator": generator_path,
            "cvrics": cvrics_path,
            "rows": table.n_rows,
            "seed": args.seed,
        }
    )
    return EXIT_OK


def _constraints_for(args, table: dataset.DatasetTable) -> structure.SearchConstraints:
    doc = dict(read_json(args.constraints)) if args.constraints else {}
    if args.max_parents is not None:
        doc["max_parents"] = args.max_parents
    return structure.SearchConstraints.from_json(doc, [c.name for c in table.columns])


def cmd_learn(args) -> int:
    table = dataset.add_missing_state(dataset.load_table(args.data))
    constraints = _constraints_for(args, table)
    summary = structure.bootstrap_ensemble(
        table, args.bootstraps, constraints, seed=args.seed, restarts=args.restarts
    )
    dag = structure.average_structure(summary, args.threshold)
    net = inference.fit_cpts(dag, table, alpha=args.alpha)
    os.makedirs(args.out, exist_ok=True)
    ensemble_path = os.path.join(args.out, "ensemble.json")
    model_path = os.path.join(args.out, "model.json")
    write_json(ensemble_path, summary.to_json())
    write_json(model_path, model.network_to_json(net))
    _emit(
        {
            "ensemble": ensemble_path,
            "model": model_path,
            "replicates": summary.replicates,
            "edges": len(dag.edges),
        }
    )
    return EXIT_OK


def _read_request(args, built: dict) -> dict:
    if args.request:
        if args.request == "-":
            doc = json.loads(sys.stdin.read())
        else:
            doc = read_json(args.request)
        if not isinstance(doc, dict):
            raise MalformedRequest("request file must hold a JSON object")
        return doc
    return built


def cmd_query(args) -> int:
    net, fingerprint = _load_model(args.model)
    request = _read_request(
        args,
        {
            "target": {"variable": args.target},
            "evidence": _parse_assignments(args.evidence, "evidence"),
        },
    )
    _emit(api.handle_query(net, fingerprint, request))
    return EXIT_OK


def cmd_whatif(args) -> int:
    net, fingerprint = _load_model(args.model)
    request = _read_request(
        args,
        {
            "target": {"variable": args.target, "state": args.state},
            "baseline": _parse_assignments(args.baseline, "baseline"),
            "alternative": _parse_assignments(args.alternative, "alternative"),
        },
    )
    _emit(api.handle_whatif(net, fingerprint, request))
    return EXIT_OK


def cmd_cvrics(args) -> int:
    table = dataset.load_table(args.data)
    spec = dataset.CvricsSpec.from_json(read_json(args.spec))
    scores = dataset.compute_cvrics(table, spec)
    dataset.save_table(table, args.out, extra_columns={"cvrics": scores})
    result = {
        "out": args.out,
        "n": int(scores.size),
        "min": int(scores.min()),
        "max": int(scores.max()),
    }
    if args.bins:
        edges = [float(e) for e in args.bins.split(",")]
        counts = dataset.histogram(scores, edges)
        result["histogram"] = {"edges": edges, "counts": [int(c) for c in counts]}
    _emit(result)
    return EXIT_OK


def cmd_train(args) -> int:
    table = dataset.load_table(args.data)
    split = dataset.SplitConfig(
        train_fraction=args.train_fraction,
        stratify_on=args.label,
        seed=derive_seed(args.seed, 0),
    )
    train, test = dataset.train_test_split(table, split)
    balanced = dataset.smote(
        train,
        args.label,
        dataset.SmoteConfig(
            k_neighbors=args.smote_k,
            target_ratio=args.target_ratio,
            seed=derive_seed(args.seed, 1),
        ),
    )
    fit_seed = derive_seed(args.seed, 2)
    if args.kind == "forest":
        fitted = classify.fit_forest(
            balanced,
            args.label,
            n_trees=args.trees,
            max_depth=args.depth,
            min_leaf=args.min_leaf,
            feature_fraction=args.feature_fraction,
            seed=fit_seed,
        )
    elif args.kind == "logistic":
        fitted = classify.fit_logistic(
            balanced, args.label, learn_rate=args.learn_rate, epochs=args.epochs, l2=args.l2
        )
    else:
        fitted = classify.fit_boosted(
            balanced,
            args.label,
            stages=args.stages,
            max_depth=args.depth,
            eta=args.eta,
            min_leaf=args.min_leaf,
        )
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, f"model_{args.kind}.json")
    test_path = os.path.join(args.out, "test.csv")
    write_json(model_path, classify.model_to_json(fitted))
    dataset.save_table(test, test_path)
    _emit(
        {
            "model": model_path,
            "test": test_path,
            "train_rows": train.n_rows,
            "balanced_rows": balanced.n_rows,
            "test_rows": test.n_rows,
        }
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    fitted = classify.model_from_json(read_json(args.model))
    test = dataset.load_table(args.test)
    li = test.column_index(fitted.label)
    keep = np.flatnonzero(test.codes[:, li] != dataset.MISSING)
    test = test.select_rows(keep.tolist())
    scores = classify.predict_proba(fitted, test)
    report = classify.evaluate(
        scores,
        test.codes[:, li],
        threshold=args.threshold,
        bootstrap=args.bootstraps,
        seed=args.seed,
    )
    doc = report.to_json()
    write_json(args.out, doc)
    _emit(doc)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.model, args.ensemble)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="surveybn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the planted synthetic survey")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=20000, help="number of rows")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("learn", help="learn structure + CPTs from a CSV")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--bootstraps", type=int, default=101)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--max-parents", type=int, default=None)
    p.add_argument("--constraints", help="JSON constraints file")
    p.add_argument("--restarts", type=int, default=1)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("query", help="posterior of a target given evidence")
    p.add_argument("--model", required=True)
    p.add_argument("--request", help="JSON request file, or - for stdin")
    p.add_argument("--target", help="target variable name")
    p.add_argument("--evidence", action="append", metavar="VAR=STATE")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("whatif", help="posterior delta between two evidence sets")
    p.add_argument("--model", required=True)
    p.add_argument("--request", help="JSON request file, or - for stdin")
    p.add_argument("--target", help="target variable name")
    p.add_argument("--state", help="target state label")
    p.add_argument("--baseline", action="append", metavar="VAR=STATE")
    p.add_argument("--alternative", action="append", metavar="VAR=STATE")
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("cvrics", help="append the coverage score column")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", required=True, help="JSON component config")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--bins", help="comma-separated histogram edges")
    p.set_defaults(func=cmd_cvrics)

    p = sub.add_parser("train", help="split, rebalance, and fit a classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kind", choices=("forest", "logistic", "boosted"), default="forest")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--target-ratio", type=float, default=1.0)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--feature-fraction", type=float, default=0.7)
    p.add_argument("--learn-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--stages", type=int, default=100)
    p.add_argument("--eta", type=float, default=0.1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a fitted model on a held-out CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--bootstraps", type=int, default=1000)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="HTTP JSON service over a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--ensemble", help="ensemble JSON for edge frequencies")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SurveyBnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
