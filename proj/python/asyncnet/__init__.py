"""Stochastic-gradient learning over synchronous and asynchronous networks."""

import json as _json

from ._asyncnet import (
    ConfigError,
    DivergenceError,
    PreconditionError,
    config_digest,
    demo,
    demo_names,
    mean_stability,
    metropolis_ring,
    perron,
)
from . import _asyncnet


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def theory(config, seed=None):
    return _asyncnet.theory(_text(config), seed)


def simulate(config, seed=None, threads=None):
    return _asyncnet.simulate(_text(config), seed, threads)


def compare(config, seed=None, threads=None):
    return _asyncnet.compare(_text(config), seed, threads)


__all__ = [
    "ConfigError",
    "DivergenceError",
    "PreconditionError",
    "compare",
    "config_digest",
    "demo",
    "demo_names",
    "mean_stability",
    "metropolis_ring",
    "perron",
    "simulate",
    "theory",
]
