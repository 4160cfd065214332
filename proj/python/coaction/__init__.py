"""Coaction analysis from Python.

Inputs that the CLI reads as JSON files are accepted here as dicts.
"""

import json

from . import _core
from ._core import (
    AnalysisError,
    BootstrapError,
    CoactError,
    DegenerateError,
    DomainError,
    EstimationError,
    FitError,
    UsageError,
)

__all__ = [
    "classify",
    "boolean_pattern",
    "d_separated",
    "check_conditions",
    "excess_risk",
    "fit_model",
    "exact_risk",
    "sample",
    "soundness",
    "run_cli",
    "CoactError",
    "UsageError",
    "DomainError",
    "AnalysisError",
    "DegenerateError",
    "EstimationError",
    "FitError",
    "BootstrapError",
]


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def classify(response):
    """Coaction verdict and monotonicity for a response-function document."""
    return json.loads(_core.classify(_text(response)))


def boolean_pattern(pattern_id):
    return json.loads(_core.boolean_pattern(pattern_id))


def d_separated(graph, x, y, z=()):
    return _core.d_separated(_text(graph), list(x), list(y), list(z))


def check_conditions(graph, a="A", b="B", y="Y", c=(), u=(), asserted_functional=False):
    return json.loads(
        _core.check_conditions(_text(graph), a, b, y, list(c), list(u), asserted_functional)
    )


def excess_risk(alpha, beta, y):
    """Cell risks and the nonparametric excess-risk test from 0/1 sequences."""
    return json.loads(_core.excess_risk(list(alpha), list(beta), list(y)))


def fit_model(alpha, beta, y, link="risk", trend=None, t=0.0):
    """Fit a linear-risk or linear-odds model and test the excess at trend value t."""
    trend = None if trend is None else list(trend)
    return json.loads(_core.fit_model(list(alpha), list(beta), list(y), link, trend, t))


def exact_risk(scenario):
    return json.loads(_core.exact_risk(_text(scenario)))


def sample(scenario, n, seed=0, include_u=False):
    """Draw n rows; returns a dict of column name to list of values."""
    return _core.sample(_text(scenario), n, seed, include_u)


def soundness(trials, seed=0, workers=1, blocks="singleton", non_monotone_rate=0.0, flip_rate=0.0):
    return json.loads(
        _core.soundness(trials, seed, workers, blocks, non_monotone_rate, flip_rate)
    )


def run_cli(args):
    """Run the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
