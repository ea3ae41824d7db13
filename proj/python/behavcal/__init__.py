"""Behavioral-bias calibration toolkit: synthetic respondents, estimators,
validation checks and the momentum market model."""

import json

from . import _core
from ._core import (
    DegenerateData,
    Error,
    InsufficientData,
    InvalidArgument,
    IoError,
    biases,
    expected_measure,
    ground_truth,
    holm,
    ks_test,
    market_returns,
    momentum_stats,
    power,
    profiles,
    simulate_market,
    validate_ranges,
)

__all__ = [
    "DegenerateData",
    "Error",
    "InsufficientData",
    "InvalidArgument",
    "IoError",
    "biases",
    "estimate",
    "estimate_cells",
    "expected_measure",
    "ground_truth",
    "holm",
    "ks_test",
    "market_returns",
    "momentum_stats",
    "power",
    "profiles",
    "run_synthetic",
    "simulate_market",
    "validate_ranges",
]


def _lines(records):
    return [r if isinstance(r, str) else json.dumps(r) for r in records]


def run_synthetic(biases=(), profiles=(), strengths=(1.0,), agents=100, seed=1,
                  noise=1.0, repeats=1, jobs=1):
    """Synthetic decision records as dicts."""
    lines = _core.run_synthetic(list(biases), list(profiles), list(strengths),
                                agents, seed, noise, repeats, jobs)
    return [json.loads(line) for line in lines]


def estimate(bias, records):
    return _core.estimate(bias, _lines(records))


def estimate_cells(records, jobs=1):
    return _core.estimate_cells(_lines(records), jobs)
