"""Score-based DAG learning with bootstrapped ensemble averaging.

The score is AIC in maximization form, aic = log_likelihood - parameter_count,
which decomposes over families (child, parent set). Search is greedy hill
climbing over add/delete/reverse moves under user constraints; robustness
comes from learning one DAG per bootstrap resample and majority-voting edges.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import MISSING, DatasetTable
from .errors import ConstraintUnsatisfiable, CycleError, EmptyData
from .model import Dag, Edge
from .rng import derive_rng, derive_seed

SCORE_TOLERANCE = 1e-9
ENSEMBLE_FORMAT_VERSION = 1

_ADD, _DELETE, _REVERSE = 0, 1, 2


@dataclass(frozen=True)
class ScoreValue:
    log_likelihood: float
    parameter_count: int

    @property
    def aic(self) -> float:
        return self.log_likelihood - self.parameter_count


@dataclass(frozen=True)
class SearchConstraints:
    """Limits on the DAG search space.

    Edges may only run from a lower tier to an equal-or-higher tier when
    tiers are given; required edges are fixed in, forbidden edges are never
    considered.
    """

    max_parents: int = 4
    forbidden: frozenset[Edge] = frozenset()
    required: frozenset[Edge] = frozenset()
    tiers: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "forbidden", frozenset(self.forbidden))
        object.__setattr__(self, "required", frozenset(self.required))
        if self.tiers is not None:
            object.__setattr__(self, "tiers", tuple(self.tiers))
        if self.max_parents < 0:
            raise ValueError("max_parents must be >= 0")
        overlap = self.required & self.forbidden
        if overlap:
            raise ConstraintUnsatisfiable(
                f"edges both required and forbidden: {sorted(overlap)}"
            )

    def tier_ok(self, parent: int, child: int) -> bool:
        if self.tiers is None:
            return True
        return self.tiers[parent] <= self.tiers[child]

    @classmethod
    def from_json(cls, doc: Mapping, names: Sequence[str]) -> "SearchConstraints":
        index = {name: i for i, name in enumerate(names)}

        def edge(pair: Sequence[str]) -> Edge:
            return (index[pair[0]], index[pair[1]])

        tiers = None
        if doc.get("tiers"):
            tiers = tuple(int(doc["tiers"].get(name, 0)) for name in names)
        return cls(
            max_parents=int(doc.get("max_parents", 4)),
            forbidden=frozenset(edge(p) for p in doc.get("forbidden", [])),
            required=frozenset(edge(p) for p in doc.get("required", [])),
            tiers=tiers,
        )


@dataclass(frozen=True)
class EnsembleSummary:
    """Directed-edge vote tallies across bootstrap replicates."""

    variables: tuple[str, ...]
    replicates: int
    edge_counts: tuple[tuple[Edge, int], ...]
    seeds: tuple[int, ...]
    _freq: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        counts = tuple(sorted(((int(p), int(c)), int(n)) for (p, c), n in self.edge_counts))
        object.__setattr__(self, "edge_counts", counts)
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        for (p, c), n in counts:
            if not (0 <= n <= self.replicates):
                raise ValueError(f"edge ({p}, {c}) counted {n} times out of {self.replicates}")
        object.__setattr__(self, "_freq", {e: n / self.replicates for e, n in counts})

    def frequency(self, parent: int, child: int) -> float:
        return self._freq.get((parent, child), 0.0)

    def to_json(self) -> dict:
        return {
            "format_version": ENSEMBLE_FORMAT_VERSION,
            "replicates": self.replicates,
            "variables": list(self.variables),
            "edges": [
                {
                    "from": self.variables[p],
                    "to": self.variables[c],
                    "frequency": n / self.replicates,
                }
                for (p, c), n in self.edge_counts
            ],
            "seeds": list(self.seeds),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "EnsembleSummary":
        if doc.get("format_version") != ENSEMBLE_FORMAT_VERSION:
            raise ValueError(
                f"unsupported ensemble format_version {doc.get('format_version')!r}"
            )
        names = list(doc["variables"])
        index = {name: i for i, name in enumerate(names)}
        b = int(doc["replicates"])
        counts = tuple(
            ((index[e["from"]], index[e["to"]]), round(e["frequency"] * b))
            for e in doc["edges"]
        )
        return cls(tuple(names), b, counts, tuple(doc.get("seeds", ())))


def family_score(child: int, parents: Sequence[int], data: DatasetTable) -> ScoreValue:
    """Maximum-likelihood family term: sum of N(c,pc) * ln(N(c,pc)/N(pc)).

    Zero counts contribute 0 (the 0*ln(0) = 0 convention). parameter_count is
    (|states(child)| - 1) times the number of parent configurations.
    """
    n = data.n_rows
    if n == 0:
        raise EmptyData("family score needs at least one row")
    parents = tuple(parents)
    if child in parents:
        raise ValueError(f"node {child} cannot be its own parent")
    cards = [c.cardinality for c in data.columns]
    involved = (child, *parents)
    for j in involved:
        if np.any(data.codes[:, j] == MISSING):
            raise ValueError(
                f"column {data.columns[j].name!r} has missing cells; recode them first"
            )
    card_child = cards[child]
    n_configs = 1
    code = np.zeros(n, dtype=np.int64)
    for p in parents:
        code = code * cards[p] + data.codes[:, p]
        n_configs *= cards[p]
    combined = code * card_child + data.codes[:, child]
    counts = np.bincount(combined, minlength=n_configs * card_child).reshape(
        n_configs, card_child
    )
    row_totals = counts.sum(axis=1)
    mask = counts > 0
    ll = float(
        np.sum(
            counts[mask]
            * (np.log(counts[mask]) - np.log(row_totals[np.nonzero(mask)[0]]))
        )
    )
    return ScoreValue(ll, (card_child - 1) * n_configs)


def aic_score(dag: Dag, data: DatasetTable) -> ScoreValue:
    """Sum of family scores over all nodes; higher is better."""
    if data.n_rows == 0:
        raise EmptyData("aic score needs at least one row")
    ll = 0.0
    k = 0
    for v in range(dag.node_count):
        part = family_score(v, dag.parents(v), data)
        ll += part.log_likelihood
        k += part.parameter_count
    return ScoreValue(ll, k)


class _Search:
    """One greedy climb; carries the per-family score cache across moves."""

    def __init__(self, data: DatasetTable, constraints: SearchConstraints):
        self.data = data
        self.cons = constraints
        self.m = data.n_cols
        self.cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def fam(self, child: int, parents: tuple[int, ...]) -> float:
        key = (child, parents)
        if key not in self.cache:
            self.cache[key] = family_score(child, parents, self.data).aic
        return self.cache[key]

    def total(self, dag: Dag) -> float:
        return sum(self.fam(v, dag.parents(v)) for v in range(self.m))

    def can_add(self, dag: Dag, p: int, c: int) -> bool:
        return (
            p != c
            and not dag.has_edge(p, c)
            and (p, c) not in self.cons.forbidden
            and self.cons.tier_ok(p, c)
            and len(dag.parents(c)) < self.cons.max_parents
            and not _has_path(dag, c, p)
        )

    def admissible_adds(self, dag: Dag) -> list[Edge]:
        return [
            (p, c)
            for p in range(self.m)
            for c in range(self.m)
            if self.can_add(dag, p, c)
        ]

    def climb(self, dag: Dag) -> tuple[Dag, float]:
        while True:
            best_delta = SCORE_TOLERANCE
            best_move: tuple[int, int, int] | None = None
            for p, c in self.admissible_adds(dag):
                delta = self.fam(c, _insert(dag.parents(c), p)) - self.fam(c, dag.parents(c))
                if delta > best_delta:
                    best_delta, best_move = delta, (_ADD, p, c)
            for p, c in dag.sorted_edges():
                if (p, c) in self.cons.required:
                    continue
                delta = self.fam(c, _remove(dag.parents(c), p)) - self.fam(c, dag.parents(c))
                if delta > best_delta:
                    best_delta, best_move = delta, (_DELETE, p, c)
            for p, c in dag.sorted_edges():
                if (p, c) in self.cons.required:
                    continue
                if (c, p) in self.cons.forbidden or not self.cons.tier_ok(c, p):
                    continue
                if len(dag.parents(p)) >= self.cons.max_parents:
                    continue
                without = Dag(self.m, dag.edges - {(p, c)})
                if _has_path(without, p, c):
                    continue
                delta = (
                    self.fam(c, _remove(dag.parents(c), p))
                    - self.fam(c, dag.parents(c))
                    + self.fam(p, _insert(dag.parents(p), c))
                    - self.fam(p, dag.parents(p))
                )
                if delta > best_delta:
                    best_delta, best_move = delta, (_REVERSE, p, c)
            if best_move is None:
                return dag, self.total(dag)
            kind, p, c = best_move
            if kind == _ADD:
                dag = Dag(self.m, dag.edges | {(p, c)})
            elif kind == _DELETE:
                dag = Dag(self.m, dag.edges - {(p, c)})
            else:
                dag = Dag(self.m, (dag.edges - {(p, c)}) | {(c, p)})


def _insert(parents: tuple[int, ...], p: int) -> tuple[int, ...]:
    return tuple(sorted(parents + (p,)))


def _remove(parents: tuple[int, ...], p: int) -> tuple[int, ...]:
    return tuple(x for x in parents if x != p)


def _has_path(dag: Dag, src: int, dst: int) -> bool:
    if src == dst:
        return True
    seen = {src}
    stack = [src]
    while stack:
        for c in dag.children(stack.pop()):
            if c == dst:
                return True
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def _required_start(m: int, cons: SearchConstraints) -> Dag:
    for p, c in cons.required:
        if not cons.tier_ok(p, c):
            raise ConstraintUnsatisfiable(f"required edge ({p}, {c}) violates tiers")
    try:
        dag = Dag(m, frozenset(cons.required))
    except CycleError as exc:
        raise ConstraintUnsatisfiable(f"required edges form a cycle: {exc}") from exc
    for v in range(m):
        if len(dag.parents(v)) > cons.max_parents:
            raise ConstraintUnsatisfiable(
                f"node {v} has {len(dag.parents(v))} required parents > max {cons.max_parents}"
            )
    return dag


def hill_climb(
    data: DatasetTable,
    constraints: SearchConstraints | None = None,
    seed: int = 0,
    restarts: int = 1,
) -> Dag:
    """Greedy AIC ascent over add/delete/reverse moves, best of `restarts` starts.

    Restart r perturbs the required-edge start graph with r random admissible
    additions before climbing. Move selection takes the largest improvement
    above a 1e-9 tolerance; exact ties resolve to the lexicographically first
    (move kind, parent, child) with add < delete < reverse.
    """
    if data.n_rows == 0:
        raise EmptyData("hill climb needs at least one row")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    cons = constraints if constraints is not None else SearchConstraints()
    search = _Search(data, cons)
    start = _required_start(data.n_cols, cons)
    best_dag: Dag | None = None
    best_score = -np.inf
    for r in range(restarts):
        dag = start
        rng = derive_rng(seed, r)
        for _ in range(r):
            options = search.admissible_adds(dag)
            if not options:
                break
            p, c = options[int(rng.integers(len(options)))]
            dag = Dag(data.n_cols, dag.edges | {(p, c)})
        dag, score = search.climb(dag)
        if score > best_score:
            best_dag, best_score = dag, score
    assert best_dag is not None
    return best_dag


def bootstrap_ensemble(
    data: DatasetTable,
    b: int,
    constraints: SearchConstraints | None = None,
    seed: int = 0,
    restarts: int = 1,
) -> EnsembleSummary:
    """Hill-climb once per bootstrap resample and tally directed edges.

    Replicate i draws everything from derive_seed(seed, i) alone, so the
    replicates can run in any order (or in parallel) and merge into the same
    tally.
    """
    if b < 1:
        raise ValueError("replicate count must be >= 1")
    if data.n_rows == 0:
        raise EmptyData("bootstrap ensemble needs at least one row")
    n = data.n_rows
    tally: Counter[Edge] = Counter()
    seeds = []
    for i in range(b):
        rep_seed = derive_seed(seed, i)
        seeds.append(rep_seed)
        rng = derive_rng(rep_seed, 0)
        resample = data.select_rows(rng.integers(0, n, size=n).tolist())
        dag = hill_climb(resample, constraints, seed=derive_seed(rep_seed, 1), restarts=restarts)
        tally.update(dag.edges)
    return EnsembleSummary(
        tuple(c.name for c in data.columns),
        b,
        tuple(tally.items()),
        tuple(seeds),
    )


def average_structure(summary: EnsembleSummary, threshold: float = 0.5) -> Dag:
    """Majority vote: keep a pair when its two directed frequencies sum past
    the threshold, oriented toward the higher frequency (tie -> lower-index
    parent); then drop weakest cycle edges until acyclic.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold {threshold} not in (0, 1]")
    m = len(summary.variables)
    kept: dict[Edge, float] = {}
    for a in range(m):
        for b in range(a + 1, m):
            f_ab = summary.frequency(a, b)
            f_ba = summary.frequency(b, a)
            if f_ab + f_ba > threshold:
                if f_ab >= f_ba:
                    kept[(a, b)] = f_ab
                else:
                    kept[(b, a)] = f_ba
    while True:
        cyclic = [
            edge
            for edge in sorted(kept)
            if _edges_path(kept.keys(), edge[1], edge[0])
        ]
        if not cyclic:
            break
        weakest = min(cyclic, key=lambda e: (kept[e], e))
        del kept[weakest]
    return Dag(m, frozenset(kept))


def _edges_path(edges, src: int, dst: int) -> bool:
    children: dict[int, list[int]] = {}
    for p, c in edges:
        children.setdefault(p, []).append(c)
    seen = {src}
    stack = [src]
    while stack:
        for c in children.get(stack.pop(), ()):
            if c == dst:
                return True
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False
