"""Quantum phase synchronization of two optically coupled optomechanical oscillators."""
from ._backend import BACKEND
from .errors import ConfigError, DivergenceError, UnphysicalStateError
from .fluctuations import drift_matrix, noise_model, physicality_check, propagate
from .meanfield import detect_limit_cycle, integrate_mean_field, phases
from .measures import gaussian_discord, log_negativity, measure_series, phase_sync, time_average
from .model import (
    BathParams,
    Bidirectional,
    DriveParams,
    NumericsParams,
    OscillatorParams,
    PRESETS,
    SystemConfig,
    Unidirectional,
    standard_config,
    validate,
)
from .simulation import SimulationResult, simulate
from .sweep import SweepAxis, SweepSpec, expand, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BathParams",
    "Bidirectional",
    "ConfigError",
    "DivergenceError",
    "DriveParams",
    "NumericsParams",
    "OscillatorParams",
    "PRESETS",
    "SimulationResult",
    "SweepAxis",
    "SweepSpec",
    "SystemConfig",
    "Unidirectional",
    "UnphysicalStateError",
    "detect_limit_cycle",
    "drift_matrix",
    "expand",
    "gaussian_discord",
    "integrate_mean_field",
    "log_negativity",
    "measure_series",
    "noise_model",
    "phase_sync",
    "phases",
    "physicality_check",
    "propagate",
    "run_sweep",
    "simulate",
    "standard_config",
    "time_average",
    "validate",
]
