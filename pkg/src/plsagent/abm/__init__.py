"""PBL classroom agent model."""
from .kernels import BACKEND
from .model import (
    ConfigError,
    RunResult,
    SimConfig,
    SimState,
    Snapshot,
    StudentAgent,
    design_config,
    event_probabilities,
    init_grid,
    make_rng,
    run,
    run_rate,
    snapshot,
    step,
)

__all__ = [
    "BACKEND",
    "ConfigError",
    "RunResult",
    "SimConfig",
    "SimState",
    "Snapshot",
    "StudentAgent",
    "design_config",
    "event_probabilities",
    "init_grid",
    "make_rng",
    "run",
    "run_rate",
    "snapshot",
    "step",
]
