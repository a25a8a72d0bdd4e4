"""Monte Carlo laboratory for the Kac collision process."""

import json as _json

from ._core import (  # noqa: F401
    ConfigError,
    IoError,
    SimulationError,
    __version__,
    bl_distance,
    cumulant_psi,
    flux_distance,
    legendre_psi_star,
    maxwell_coefficients,
    maxwell_m4_curve,
    post_collision,
    sigma_avg_delta,
    solve_lambda,
    tau,
    tilted_energy,
    time_partition,
    total_rate,
)
from . import _core


def _dumps(config):
    return config if isinstance(config, str) else _json.dumps(config)


def simulate(config):
    """Simulate one trajectory; `config` uses the CLI JSON schema."""
    return _json.loads(_core._simulate_json(_dumps(config)))


def run_experiment(config):
    """Run the frozen-particle experiment described by the config's experiment section."""
    return _json.loads(_core._experiment_json(_dumps(config)))


def config_echo(config):
    """The config with every default materialized."""
    return _json.loads(_core._config_echo_json(_dumps(config)))
