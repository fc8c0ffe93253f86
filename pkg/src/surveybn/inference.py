"""CPT estimation and exact posterior inference.

Posteriors come from sum-product variable elimination over the network's CPT
factors, with hard evidence absorbed by slicing factors down to the observed
states. The what-if query compares one target state's posterior probability
under two evidence settings; the result is associational, not causal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import MISSING, DatasetTable
from .errors import EmptyData, ImpossibleEvidence, VarInEvidence
from .model import (
    BayesianNetwork,
    Cpt,
    Dag,
    EvidenceSet,
    validate_evidence,
)


@dataclass(frozen=True)
class Factor:
    """Dense table over an ascending-index scope.

    Keeping scopes sorted means two factors' axes always align monotonically,
    so products are plain numpy broadcasts after padding with size-1 axes.
    """

    scope: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        scope = tuple(self.scope)
        if list(scope) != sorted(set(scope)):
            raise ValueError(f"scope {scope} must be strictly ascending")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != len(scope):
            raise ValueError(f"{values.ndim}-D table for {len(scope)}-variable scope")
        if np.any(values < 0):
            raise ValueError("factor values must be non-negative")
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "values", values)


def _cpt_factor(net: BayesianNetwork, node: int) -> Factor:
    cpt = net.cpts[node]
    cards = net.cardinalities
    full_scope = cpt.parents + (node,)
    shaped = cpt.table.reshape([cards[p] for p in cpt.parents] + [cards[node]])
    order = tuple(sorted(range(len(full_scope)), key=lambda i: full_scope[i]))
    return Factor(tuple(sorted(full_scope)), np.transpose(shaped, order))


def _multiply(a: Factor, b: Factor, cards: tuple[int, ...]) -> Factor:
    scope = tuple(sorted(set(a.scope) | set(b.scope)))

    def expand(f: Factor) -> np.ndarray:
        shape = [cards[v] if v in f.scope else 1 for v in scope]
        return f.values.reshape(shape)

    return Factor(scope, expand(a) * expand(b))


def _sum_out(f: Factor, var: int) -> Factor:
    axis = f.scope.index(var)
    return Factor(tuple(v for v in f.scope if v != var), f.values.sum(axis=axis))


def _slice_evidence(f: Factor, evidence: dict[int, int]) -> Factor:
    values = f.values
    scope = list(f.scope)
    for var in [v for v in f.scope if v in evidence]:
        axis = scope.index(var)
        values = np.take(values, evidence[var], axis=axis)
        scope.pop(axis)
    return Factor(tuple(scope), values)


def _eliminate(
    factors: list[Factor],
    hidden: set[int],
    cards: tuple[int, ...],
    order: Sequence[int] | None = None,
) -> list[Factor]:
    """Sum out hidden variables, cheapest (min-degree) first, lowest index on
    ties. An explicit order overrides the heuristic; results agree for any
    order, so the heuristic only affects cost."""
    if order is not None and set(order) != set(hidden):
        raise ValueError("explicit elimination order must cover the hidden variables")
    work = list(factors)
    remaining = set(hidden)
    queue = list(order) if order is not None else None
    while remaining:
        if queue is not None:
            target = queue.pop(0)
        else:
            degree = {}
            for h in remaining:
                union: set[int] = set()
                for f in work:
                    if h in f.scope:
                        union.update(f.scope)
                degree[h] = len(union - {h})
            target = min(remaining, key=lambda h: (degree[h], h))
        touching = [f for f in work if target in f.scope]
        rest = [f for f in work if target not in f.scope]
        product = touching[0]
        for f in touching[1:]:
            product = _multiply(f, product, cards)
        work = rest + [_sum_out(product, target)]
        remaining.remove(target)
    return work


def _joint_with_evidence(
    net: BayesianNetwork,
    var: int,
    evidence: EvidenceSet,
    order: Sequence[int] | None = None,
) -> np.ndarray:
    """Unnormalized vector P(var = s, evidence) for every state s."""
    validate_evidence(net, evidence)
    if var in evidence:
        raise VarInEvidence(
            f"query variable {net.variables[var].name!r} is fixed by the evidence"
        )
    obs = evidence.as_dict()
    cards = net.cardinalities
    factors = [
        _slice_evidence(_cpt_factor(net, v), obs) for v in range(net.node_count)
    ]
    hidden = set(range(net.node_count)) - {var} - set(obs)
    reduced = _eliminate(factors, hidden, cards, order)
    result = reduced[0]
    for f in reduced[1:]:
        result = _multiply(f, result, cards)
    if result.scope == ():
        raise AssertionError("query variable vanished during elimination")
    return np.asarray(result.values, dtype=float).reshape(cards[var])


@dataclass(frozen=True, eq=False)
class PosteriorResult:
    variable: int
    distribution: np.ndarray
    evidence_probability: float
    evidence: EvidenceSet

    def __post_init__(self) -> None:
        dist = np.asarray(self.distribution, dtype=float)
        dist.setflags(write=False)
        object.__setattr__(self, "distribution", dist)


@dataclass(frozen=True)
class InterventionDelta:
    target_variable: int
    target_state: int
    baseline_evidence: EvidenceSet
    alternative_evidence: EvidenceSet
    baseline_prob: float
    alternative_prob: float

    @property
    def delta(self) -> float:
        return self.alternative_prob - self.baseline_prob


def fit_cpts(dag: Dag, data: DatasetTable, alpha: float = 1.0) -> BayesianNetwork:
    """Estimate every CPT row as (N(c, pc) + alpha) / (N(pc) + alpha*|states(c)|).

    alpha = 0 gives maximum likelihood with a uniform fallback for parent
    configurations never seen in the data.
    """
    if data.n_rows == 0:
        raise EmptyData("CPT fitting needs at least one row")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if dag.node_count != data.n_cols:
        raise ValueError(
            f"dag has {dag.node_count} nodes but data has {data.n_cols} columns"
        )
    if np.any(data.codes == MISSING):
        raise ValueError("data has missing cells; recode them first")
    cards = [c.cardinality for c in data.columns]
    cpts = []
    for v in range(dag.node_count):
        parents = dag.parents(v)
        n_configs = 1
        code = np.zeros(data.n_rows, dtype=np.int64)
        for p in parents:
            code = code * cards[p] + data.codes[:, p]
            n_configs *= cards[p]
        counts = np.bincount(
            code * cards[v] + data.codes[:, v], minlength=n_configs * cards[v]
        ).reshape(n_configs, cards[v]).astype(float)
        totals = counts.sum(axis=1, keepdims=True)
        if alpha > 0:
            table = (counts + alpha) / (totals + alpha * cards[v])
        else:
            unseen = totals[:, 0] == 0
            safe = np.where(totals == 0, 1.0, totals)
            table = counts / safe
            table[unseen, :] = 1.0 / cards[v]
        cpts.append(Cpt(v, parents, table))
    return BayesianNetwork(data.columns, dag, tuple(cpts))


def posterior(net: BayesianNetwork, var: int, evidence: EvidenceSet) -> PosteriorResult:
    """P(var | evidence) by variable elimination; mass P(e) is the normalizer."""
    joint = _joint_with_evidence(net, var, evidence)
    mass = float(joint.sum())
    if mass <= 0.0:
        names = {
            net.variables[v].name: net.variables[v].states[s]
            for v, s in evidence.items
        }
        raise ImpossibleEvidence(f"evidence {names} has probability zero")
    return PosteriorResult(var, joint / mass, min(mass, 1.0), evidence)


def prior_marginal(net: BayesianNetwork, var: int) -> PosteriorResult:
    """Marginal with no evidence; evidence probability is exactly 1."""
    result = posterior(net, var, EvidenceSet())
    return PosteriorResult(var, result.distribution, 1.0, EvidenceSet())


def likelihood(net: BayesianNetwork, var: int, evidence: EvidenceSet) -> np.ndarray:
    """Vector of P(evidence | var = s), one entry per state s.

    Computed as P(var = s, e) / P(var = s); states with zero prior mass get
    likelihood 0. Empty evidence yields the all-ones vector.
    """
    joint = _joint_with_evidence(net, var, evidence)
    prior = _joint_with_evidence(net, var, EvidenceSet())
    out = np.zeros_like(joint)
    nz = prior > 0
    out[nz] = joint[nz] / prior[nz]
    return out


def intervention_delta(
    net: BayesianNetwork,
    target_variable: int,
    target_state: int,
    baseline: EvidenceSet,
    alternative: EvidenceSet,
) -> InterventionDelta:
    """Change in P(target | e) when evidence moves from baseline to alternative."""
    if not (0 <= target_state < net.variables[target_variable].cardinality):
        raise ValueError(
            f"state {target_state} invalid for {net.variables[target_variable].name!r}"
        )
    p_base = float(posterior(net, target_variable, baseline).distribution[target_state])
    p_alt = float(
        posterior(net, target_variable, alternative).distribution[target_state]
    )
    return InterventionDelta(
        target_variable, target_state, baseline, alternative, p_base, p_alt
    )
