"""Spin-1/2 collision model with long-range environment couplings.

Simulates a system qubit colliding with a chain of environment qubits that
couple among themselves, and reports information backflow (accumulated
trace-distance revivals), l1 coherence, system-environment mutual information
and a correlation-based bound on the trace-distance increment.
"""

from .config import ConfigError, ExperimentConfig, Sweep, config_from_mapping, parse_angle
from .engine import (
    CollisionRecord,
    TrajectoryPair,
    WindowState,
    brute_force_run,
    collide_step,
    init,
    run,
    run_distances,
    summarize,
)
from .model import Collective, Consecutive, CouplingConfig, Separate, parse_env_model

__version__ = "0.1.0"

__all__ = [
    "Collective",
    "CollisionRecord",
    "ConfigError",
    "Consecutive",
    "CouplingConfig",
    "ExperimentConfig",
    "Separate",
    "Sweep",
    "TrajectoryPair",
    "WindowState",
    "brute_force_run",
    "collide_step",
    "config_from_mapping",
    "init",
    "parse_angle",
    "parse_env_model",
    "run",
    "run_distances",
    "summarize",
]
