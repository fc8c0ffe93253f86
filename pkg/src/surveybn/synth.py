"""Planted synthetic survey generator.

An 8-variable binary network with known structure and known effect sizes, used
to exercise the whole pipeline end to end: learning should recover its
skeleton, and the what-if query on financial literacy should recover the
planted +0.06 gap in condom use. All variables use states (no, yes) so that
schema inference from CSV reproduces the same state order.
"""

from __future__ import annotations

import numpy as np

from .dataset import CvricsSpec
from .model import BayesianNetwork, Cpt, Dag, VariableSpec

GENERATOR_VARIABLES = (
    "co_membership",
    "financial_literacy",
    "savings_account",
    "condom_use",
    "legal_training",
    "hiv_test",
    "depression",
    "self_efficacy",
)

PLANTED_EDGE = ("financial_literacy", "condom_use")
PLANTED_DELTA = 0.06


def _binary(name: str, index: int) -> VariableSpec:
    return VariableSpec(name, ("no", "yes"), index)


def _rows(*p_yes: float) -> np.ndarray:
    return np.array([[1.0 - p, p] for p in p_yes])


def generator_network() -> BayesianNetwork:
    """The ground-truth network behind the synthetic survey.

    Community-organization membership drives financial literacy and legal
    training; literacy drives savings and (by exactly +0.06) condom use;
    savings and legal training drive HIV testing; depression and membership
    drive self-efficacy.
    """
    variables = tuple(_binary(name, i) for i, name in enumerate(GENERATOR_VARIABLES))
    co, fin, sav, con, leg, hiv, dep, eff = range(8)
    edges = frozenset(
        {(co, fin), (fin, sav), (fin, con), (co, leg), (sav, hiv), (leg, hiv), (dep, eff), (co, eff)}
    )
    dag = Dag(8, edges)
    cpts = (
        Cpt(co, (), _rows(0.6)),
        # rows ordered by co_membership: no, yes
        Cpt(fin, (co,), _rows(0.25, 0.75)),
        Cpt(sav, (fin,), _rows(0.3, 0.8)),
        # the planted what-if gap: 0.84 - 0.78 = 0.06
        Cpt(con, (fin,), _rows(0.78, 0.84)),
        Cpt(leg, (co,), _rows(0.2, 0.7)),
        # rows ordered by (savings_account, legal_training): nn, ny, yn, yy
        Cpt(hiv, (sav, leg), _rows(0.3, 0.74, 0.56, 0.9)),
        Cpt(dep, (), _rows(0.3)),
        # rows ordered by (co_membership, depression): nn, ny, yn, yy
        Cpt(eff, (co, dep), _rows(0.6, 0.25, 0.85, 0.5)),
    )
    return BayesianNetwork(variables, dag, cpts)


def generator_cvrics_spec() -> CvricsSpec:
    """Coverage-score components over the synthetic columns, maxing out at 30."""
    four_point = (("no", 0), ("yes", 4))
    return CvricsSpec(
        (
            ("co_membership", four_point),
            ("financial_literacy", four_point),
            ("savings_account", four_point),
            ("condom_use", four_point),
            ("legal_training", four_point),
            ("hiv_test", four_point),
            ("self_efficacy", (("no", 0), ("yes", 6))),
        )
    )
