"""End-to-end run: mean field, covariance, measures and time averages."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fluctuations import CovarianceSeries, physicality_check, propagate
from .meanfield import ClassicalTrajectory, integrate_mean_field
from .measures import MeasureSeries, TimeAverages, measure_series, time_average
from .model import SystemConfig, validate

__all__ = ["SimulationResult", "simulate", "averaging_window"]


@dataclass
class SimulationResult:
    config: SystemConfig
    trajectory: ClassicalTrajectory
    covariance: CovarianceSeries
    series: MeasureSeries
    averages: TimeAverages
    converged: bool
    physical: bool
    min_uncertainty_eig: float


def averaging_window(config: SystemConfig, traj: ClassicalTrajectory, length: float | None = None) -> float:
    """Longest whole number of detected periods fitting in ``length``."""
    length = config.numerics.t_average if length is None else length
    period = traj.period_estimate
    if traj.converged and period:
        n = math.floor(length / period + 1e-9)
        if n >= 1:
            return n * period
    return length


def simulate(config: SystemConfig, *, t_average: float | None = None) -> SimulationResult:
    """Run the full pipeline for one configuration.

    ``t_average`` overrides the averaging length (the run is extended to
    cover it). The window starts at ``numerics.t_transient``; the run counts
    as converged when the classical motion settled before that time.
    """
    report = validate(config)
    if not report.ok:
        raise ConfigError("; ".join(str(v) for v in report.violations))
    num = config.numerics
    length = num.t_average if t_average is None else t_average
    t_end = num.t_transient + length
    traj = integrate_mean_field(config, t_end)
    cov = propagate(config, traj)
    series = measure_series(traj, cov, config)
    window = averaging_window(config, traj, length)
    avg = time_average(series, num.t_transient, window)
    settled = traj.transient_end is not None and traj.transient_end <= num.t_transient
    converged = traj.converged and settled
    in_window = (cov.times >= avg.t_start) & (cov.times <= avg.t_stop)
    phys = physicality_check(cov.covariances[in_window])
    return SimulationResult(
        config=config,
        trajectory=traj,
        covariance=cov,
        series=series,
        averages=avg,
        converged=bool(converged),
        physical=bool(phys.physical and np.all(series.physical[in_window])),
        min_uncertainty_eig=phys.min_uncertainty_eig,
    )
