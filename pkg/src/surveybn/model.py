"""Discrete Bayesian-network primitives.

A network is a triple of categorical variables, a DAG over them, and one
conditional probability table per node. The joint distribution factorizes as

    P(x_1, ..., x_m) = prod_v P(x_v | x_parents(v))

with CPT rows laid out row-major over parent state tuples in parents-order.
All types are immutable after construction; graph edits return new objects.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from math import exp, log, prod
from typing import Iterable, Mapping, Sequence, TYPE_CHECKING

import numpy as np

from .errors import (
    CycleError,
    DuplicateEdge,
    IncompleteAssignment,
    OverlapError,
    UnknownState,
    UnknownVariable,
)
from .rng import derive_rng

if TYPE_CHECKING:  # pragma: no cover - import cycle guard
    from .dataset import DatasetTable

NETWORK_FORMAT_VERSION = 1

Edge = tuple[int, int]


@dataclass(frozen=True)
class VariableSpec:
    """A named categorical variable with an ordered list of state labels."""

    name: str
    states: tuple[str, ...]
    index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) < 2:
            raise ValueError(f"variable {self.name!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise ValueError(f"variable {self.name!r} has duplicate state labels")
        if self.index < 0:
            raise ValueError("variable index must be non-negative")

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def state_index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise UnknownState(
                f"variable {self.name!r} has no state {label!r}; states are {list(self.states)}"
            ) from None


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over nodes 0..node_count-1.

    Acyclicity is revalidated on construction, so every mutation path
    (``dag_add_edge`` and friends) hands back a checked graph.
    """

    node_count: int
    edges: frozenset[Edge] = frozenset()
    _parents: tuple[tuple[int, ...], ...] = field(
        init=False, repr=False, compare=False, default=()
    )
    _children: tuple[tuple[int, ...], ...] = field(
        init=False, repr=False, compare=False, default=()
    )
    _order: tuple[int, ...] = field(init=False, repr=False, compare=False, default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", frozenset(self.edges))
        if self.node_count < 0:
            raise ValueError("node_count must be non-negative")
        pa: list[list[int]] = [[] for _ in range(self.node_count)]
        ch: list[list[int]] = [[] for _ in range(self.node_count)]
        for p, c in self.edges:
            if not (0 <= p < self.node_count and 0 <= c < self.node_count):
                raise ValueError(f"edge ({p}, {c}) out of range")
            if p == c:
                raise CycleError(f"self-loop on node {p}")
            pa[c].append(p)
            ch[p].append(c)
        object.__setattr__(self, "_parents", tuple(tuple(sorted(s)) for s in pa))
        object.__setattr__(self, "_children", tuple(tuple(sorted(s)) for s in ch))
        order = _kahn(self.node_count, self._children, [len(s) for s in self._parents])
        if order is None:
            raise CycleError("edge set contains a directed cycle")
        object.__setattr__(self, "_order", tuple(order))

    def parents(self, node: int) -> tuple[int, ...]:
        return self._parents[node]

    def children(self, node: int) -> tuple[int, ...]:
        return self._children[node]

    def has_edge(self, parent: int, child: int) -> bool:
        return (parent, child) in self.edges

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)


def _kahn(n: int, children: Sequence[Sequence[int]], in_deg: list[int]) -> list[int] | None:
    """Topological order with ascending-index tie-break, or None on a cycle."""
    ready = [i for i in range(n) if in_deg[i] == 0]
    heapq.heapify(ready)
    out: list[int] = []
    deg = list(in_deg)
    while ready:
        node = heapq.heappop(ready)
        out.append(node)
        for c in children[node]:
            deg[c] -= 1
            if deg[c] == 0:
                heapq.heappush(ready, c)
    return out if len(out) == n else None


def dag_add_edge(dag: Dag, parent: int, child: int) -> Dag:
    """Return a new DAG with the edge added; reject duplicates and cycles."""
    if parent == child:
        raise CycleError(f"self-loop on node {parent}")
    if not (0 <= parent < dag.node_count and 0 <= child < dag.node_count):
        raise ValueError(f"edge ({parent}, {child}) out of range")
    if dag.has_edge(parent, child):
        raise DuplicateEdge(f"edge ({parent}, {child}) already present")
    if _reachable(dag, child, parent):
        raise CycleError(f"edge ({parent}, {child}) would close a directed cycle")
    return Dag(dag.node_count, dag.edges | {(parent, child)})


def _reachable(dag: Dag, src: int, dst: int) -> bool:
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


def topological_order(dag: Dag) -> list[int]:
    """Parents before children, ties broken by ascending node index."""
    return list(dag._order)


def d_separated(dag: Dag, x: Iterable[int], y: Iterable[int], z: Iterable[int]) -> bool:
    """Test whether every path between x and y is blocked given z.

    Implemented as reachability over active trails: a breadth-first search on
    (node, arrival direction) states. Travelling through an unobserved node
    continues chains and forks; a collider only lets the trail bounce back up
    when the collider is in z or has a descendant in z.
    """
    xs, ys, zs = set(x), set(y), set(z)
    if xs & ys or xs & zs or ys & zs:
        raise OverlapError("x, y, z must be pairwise disjoint")
    for node in xs | ys | zs:
        if not (0 <= node < dag.node_count):
            raise ValueError(f"node {node} out of range")

    # z together with its ancestors: the set that can activate a collider.
    can_activate = set(zs)
    stack = list(zs)
    while stack:
        for p in dag.parents(stack.pop()):
            if p not in can_activate:
                can_activate.add(p)
                stack.append(p)

    UP, DOWN = 0, 1  # arrived from a child / from a parent
    frontier = deque((s, UP) for s in xs)
    visited: set[tuple[int, int]] = set()
    while frontier:
        node, direction = frontier.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node in ys:
            return False
        if direction == UP:
            if node not in zs:
                for p in dag.parents(node):
                    frontier.append((p, UP))
                for c in dag.children(node):
                    frontier.append((c, DOWN))
        else:
            if node not in zs:
                for c in dag.children(node):
                    frontier.append((c, DOWN))
            if node in can_activate:
                for p in dag.parents(node):
                    frontier.append((p, UP))
    return True


@dataclass(frozen=True, eq=False)
class Cpt:
    """P(child | parent configuration), one row per parent state tuple.

    Rows are ordered row-major in parents-order: the first parent varies
    slowest. Row count must be the product of parent cardinalities (validated
    by the owning network, which knows the cardinalities).
    """

    child: int
    parents: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        table = np.array(self.table, dtype=float)
        if table.ndim != 2:
            raise ValueError("CPT table must be 2-D (configs x child states)")
        if np.any(table < 0.0) or np.any(table > 1.0):
            raise ValueError("CPT entries must lie in [0, 1]")
        sums = table.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("every CPT row must sum to 1 within 1e-9")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Cpt)
            and self.child == other.child
            and self.parents == other.parents
            and np.array_equal(self.table, other.table)
        )

    def row_index(self, assignment: Sequence[int], cards: Sequence[int]) -> int:
        """Row of the parent configuration under a full assignment."""
        code = 0
        for p in self.parents:
            code = code * cards[p] + assignment[p]
        return code


@dataclass(frozen=True, eq=False)
class BayesianNetwork:
    """Variables + DAG + one CPT per node, cross-validated on construction."""

    variables: tuple[VariableSpec, ...]
    dag: Dag
    cpts: tuple[Cpt, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "cpts", tuple(self.cpts))
        m = len(self.variables)
        if self.dag.node_count != m or len(self.cpts) != m:
            raise ValueError("variables, dag, and cpts must agree on node count")
        for i, var in enumerate(self.variables):
            if var.index != i:
                raise ValueError(f"variable {var.name!r} has index {var.index}, expected {i}")
        names = [v.name for v in self.variables]
        if len(set(names)) != m:
            raise ValueError("variable names must be unique")
        cards = [v.cardinality for v in self.variables]
        for i, cpt in enumerate(self.cpts):
            if cpt.child != i:
                raise ValueError(f"cpts[{i}] describes child {cpt.child}")
            if cpt.parents != self.dag.parents(i):
                raise ValueError(
                    f"cpts[{i}].parents {cpt.parents} != dag parents {self.dag.parents(i)}"
                )
            expected_rows = prod(cards[p] for p in cpt.parents)
            if cpt.table.shape != (expected_rows, cards[i]):
                raise ValueError(
                    f"cpts[{i}] table shape {cpt.table.shape} != ({expected_rows}, {cards[i]})"
                )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BayesianNetwork)
            and self.variables == other.variables
            and self.dag == other.dag
            and self.cpts == other.cpts
        )

    @property
    def node_count(self) -> int:
        return len(self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def variable_by_name(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(
            f"no variable named {name!r}; variables are {[v.name for v in self.variables]}"
        )


@dataclass(frozen=True)
class EvidenceSet:
    """Hard evidence: observed state index per variable index.

    Realizes the 0/1 indicator semantics — each entry pins its variable to a
    single state. Soft (likelihood) evidence is reserved and unimplemented.
    """

    items: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        items = tuple(sorted((int(v), int(s)) for v, s in self.items))
        seen = [v for v, _ in items]
        if len(set(seen)) != len(seen):
            raise ValueError("a variable may appear at most once in evidence")
        object.__setattr__(self, "items", items)

    @classmethod
    def from_dict(cls, assignments: Mapping[int, int]) -> "EvidenceSet":
        return cls(tuple(assignments.items()))

    def as_dict(self) -> dict[int, int]:
        return dict(self.items)

    def variables(self) -> frozenset[int]:
        return frozenset(v for v, _ in self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, var: int) -> bool:
        return any(v == var for v, _ in self.items)


def validate_evidence(net: BayesianNetwork, evidence: EvidenceSet) -> None:
    for var, state in evidence.items:
        if not (0 <= var < net.node_count):
            raise UnknownVariable(f"evidence variable index {var} out of range")
        if not (0 <= state < net.variables[var].cardinality):
            raise UnknownState(
                f"state index {state} invalid for variable {net.variables[var].name!r}"
            )


def joint_probability(net: BayesianNetwork, assignment: Sequence[int]) -> float:
    """P(full assignment) as the product of per-node CPT lookups.

    Accumulates in log space so networks with hundreds of nodes do not
    underflow; a single zero factor short-circuits to exactly 0.0.
    """
    cards = net.cardinalities
    if len(assignment) != net.node_count:
        raise IncompleteAssignment(
            f"assignment covers {len(assignment)} of {net.node_count} variables"
        )
    for i, s in enumerate(assignment):
        if s is None or not (0 <= int(s) < cards[i]):
            raise IncompleteAssignment(
                f"assignment[{i}] = {s!r} is not a valid state of {net.variables[i].name!r}"
            )
    acc = 0.0
    for i, cpt in enumerate(net.cpts):
        p = float(cpt.table[cpt.row_index(assignment, cards), assignment[i]])
        if p == 0.0:
            return 0.0
        acc += log(p)
    return exp(acc)


def forward_sample(net: BayesianNetwork, n: int, seed: int) -> "DatasetTable":
    """Draw n i.i.d. rows by ancestral sampling in topological order."""
    from .dataset import DatasetTable  # local import: dataset depends on model

    if n < 1:
        raise ValueError("sample count must be >= 1")
    rng = derive_rng(seed)
    cards = net.cardinalities
    rows = np.zeros((n, net.node_count), dtype=np.int32)
    for node in topological_order(net.dag):
        cpt = net.cpts[node]
        codes = np.zeros(n, dtype=np.int64)
        for p in cpt.parents:
            codes = codes * cards[p] + rows[:, p]
        cdf = np.cumsum(cpt.table, axis=1)
        draws = rng.random(n)
        rows[:, node] = np.clip(
            (draws[:, None] >= cdf[codes]).sum(axis=1), 0, cards[node] - 1
        )
    return DatasetTable(net.variables, rows, tuple(range(n)))


# -- serialization --------------------------------------------------------------

def network_to_json(net: BayesianNetwork) -> dict:
    """Versioned JSON document; the file contract between CLI, service, and UI."""
    return {
        "format_version": NETWORK_FORMAT_VERSION,
        "variables": [{"name": v.name, "states": list(v.states)} for v in net.variables],
        "edges": [list(e) for e in net.dag.sorted_edges()],
        "cpts": [
            {
                "child": cpt.child,
                "parents": list(cpt.parents),
                "table": [[float(p) for p in row] for row in cpt.table],
            }
            for cpt in net.cpts
        ],
    }


def network_from_json(doc: Mapping) -> BayesianNetwork:
    if doc.get("format_version") != NETWORK_FORMAT_VERSION:
        raise ValueError(f"unsupported network format_version {doc.get('format_version')!r}")
    variables = tuple(
        VariableSpec(v["name"], tuple(v["states"]), i)
        for i, v in enumerate(doc["variables"])
    )
    dag = Dag(len(variables), frozenset((int(p), int(c)) for p, c in doc["edges"]))
    cpts = tuple(
        Cpt(int(c["child"]), tuple(int(p) for p in c["parents"]), np.array(c["table"]))
        for c in doc["cpts"]
    )
    return BayesianNetwork(variables, dag, cpts)
