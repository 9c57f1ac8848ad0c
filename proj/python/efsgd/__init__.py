"""Simulator and verification lab for error-feedback SGD with two-sided compression."""

import json

from . import _core
from ._core import (
    ConfigError,
    compress,
    describe_compressor,
    eta_table,
    lemma_a_bound,
    remark1_u,
    run,
    theorem2_error_bound,
)

__all__ = [
    "ConfigError",
    "bound",
    "compress",
    "describe_compressor",
    "eta_table",
    "lemma_a_bound",
    "remark1_u",
    "reproduce_counterexample",
    "run",
    "simulate",
    "sweep",
    "theorem2_error_bound",
    "verify",
]


def reproduce_counterexample(id):
    """Report for counter-example `id` in {1, 2, 3} as a dict."""
    return json.loads(_core.counterexample_json(id))


def simulate(config_text):
    """Run an INI experiment. Returns (summary dict, trajectory CSV text)."""
    summary, csv = _core.simulate(config_text)
    return json.loads(summary), csv


def sweep(config_text):
    """Run an INI sweep. Returns (CSV text, rows, errored rows)."""
    return _core.sweep(config_text)


def verify(seed=20240601):
    """Full verification suite as a dict with per-check entries and an overall verdict."""
    return json.loads(_core.verify_json(seed))


def bound(which, **kwargs):
    """Evaluate a named bound; keyword names match the `bounds` CLI options."""
    return json.loads(_core.bound_json(which, **kwargs))
