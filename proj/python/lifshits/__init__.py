"""Python bindings for the Lifshits-tail experiment library."""

import json

from . import _core
from ._core import ConfigError, eta_theory, preset_names

__all__ = [
    "ConfigError",
    "classify_regime",
    "config_hash",
    "default_config",
    "eta_theory",
    "lifshits_fit",
    "plot_data",
    "preset",
    "preset_names",
    "run",
    "sample_measure",
]


def classify_regime(dims, alphas):
    return json.loads(_core.classify_regime(list(dims), list(alphas)))


def lifshits_fit(energies, values, lower=None):
    return json.loads(_core.lifshits_fit(list(energies), list(values), list(lower or [])))


def preset(name):
    return json.loads(_core.preset(name))


def default_config():
    return json.loads(_core.default_config())


def config_hash(config):
    return _core.config_hash(json.dumps(config))


def run(subcommand, config, input="", threads=0, write=True):
    """Run a subcommand; returns (summary, exit_code, records)."""
    summary, code, records = _core.run(subcommand, json.dumps(config), str(input), threads, write)
    return summary, code, json.loads(records)


def sample_measure(config):
    """Atoms as rows [x_1, ..., x_d, w]."""
    return _core.sample_measure(json.dumps(config))


def plot_data(records, kind):
    header, rows, warnings = _core.plot_data(json.dumps(records), kind)
    return header, rows, warnings
