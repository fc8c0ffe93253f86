"""Bayesian-network toolkit for categorical survey data.

Learns an ensemble-averaged DAG from bootstrapped resamples, fits smoothed
CPTs, answers exact posterior and what-if queries, and benchmarks
discriminative classifiers on the same tables. See the CLI (`surveybn`) for
the end-to-end pipeline and the service module for the HTTP API.
"""

from .errors import SurveyBnError

__all__ = ["SurveyBnError"]
__version__ = "0.1.0"
