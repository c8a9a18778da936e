"""Classical mean-field dynamics and limit-cycle bookkeeping.

The state is ``(alpha_L, beta_L, alpha_R, beta_R)``: the cavity and
mechanical amplitudes of each oscillator. Integration starts from the
origin with a fixed-step RK4 scheme.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DivergenceError
from .model import SystemConfig, kernel_params
from .util import atomic_write

__all__ = [
    "STATE_LABELS",
    "DIVERGENCE_GUARD",
    "ClassicalTrajectory",
    "LimitCycleInfo",
    "mean_field_rhs",
    "integrate_mean_field",
    "detect_limit_cycle",
    "phases",
    "write_trajectory_csv",
]

STATE_LABELS = ("alpha_L", "beta_L", "alpha_R", "beta_R")
DIVERGENCE_GUARD = 1e9


@dataclass
class LimitCycleInfo:
    converged: bool
    transient_end: float | None
    period_estimate: float | None
    fixed_point: bool = False
    fft_period: float | None = None


@dataclass
class ClassicalTrajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float
    stride: int
    config: SystemConfig | None = None
    section_times: np.ndarray | None = None
    section_states: np.ndarray | None = None
    cycle: LimitCycleInfo | None = None
    dt_error: float | None = field(default=None)

    @property
    def converged(self) -> bool:
        return bool(self.cycle and self.cycle.converged)

    @property
    def period_estimate(self) -> float | None:
        return self.cycle.period_estimate if self.cycle else None

    @property
    def transient_end(self) -> float | None:
        return self.cycle.transient_end if self.cycle else None

    def __getitem__(self, label: str) -> np.ndarray:
        return self.states[:, STATE_LABELS.index(label)]


def mean_field_rhs(state, config: SystemConfig, t: float = 0.0) -> np.ndarray:
    """Time derivative of the classical amplitudes.

    The equations are autonomous in the drive frame, so ``t`` is accepted
    for the usual ODE signature and ignored.
    """
    return kernels.mean_field_rhs(np.asarray(state, dtype=np.complex128), kernel_params(config))


def _run(config: SystemConfig, t_end: float, dt: float, stride: int):
    n_steps = int(round(t_end / dt))
    samples, sec_t, sec_s, status, fail = kernels.integrate_mean_field(
        kernel_params(config), np.zeros(4, dtype=np.complex128), dt, n_steps, stride, DIVERGENCE_GUARD
    )
    if status:
        raise DivergenceError("mean-field integration", fail * dt, "amplitude exceeded guard")
    times = np.arange(samples.shape[0]) * (stride * dt)
    return times, samples, sec_t, sec_s


def integrate_mean_field(
    config: SystemConfig,
    t_end: float,
    *,
    stride: int | None = None,
    check_dt: bool = False,
    detect: bool = True,
) -> ClassicalTrajectory:
    """Integrate from the cold start (all amplitudes zero) up to ``t_end``.

    Parameters
    ----------
    config : SystemConfig
        A validated configuration.
    t_end : float
        Final time; must cover the transient plus averaging window.
    stride : int, optional
        Keep every ``stride``-th step. Defaults to ``numerics.sample_stride``.
    check_dt : bool
        Re-run at ``dt/2`` and store the largest relative amplitude change
        over the kept samples in ``dt_error``.
    detect : bool
        Run :func:`detect_limit_cycle` on the result.

    Raises
    ------
    DivergenceError
        If any amplitude exceeds ``DIVERGENCE_GUARD``.
    """
    num = config.numerics
    if t_end < num.t_transient + num.t_average - 1e-9:
        raise ValueError(
            f"t_end={t_end} shorter than t_transient + t_average = {num.t_transient + num.t_average}"
        )
    stride = num.sample_stride if stride is None else stride
    times, samples, sec_t, sec_s = _run(config, t_end, num.dt, stride)
    traj = ClassicalTrajectory(times, samples, num.dt, stride, config, sec_t, sec_s)
    if check_dt:
        _, fine, _, _ = _run(config, t_end, num.dt / 2, 2 * stride)
        n = min(len(fine), len(samples))
        scale = max(np.abs(samples[:n]).max(), 1e-300)
        traj.dt_error = float(np.abs(fine[:n] - samples[:n]).max() / scale)
    if detect:
        traj.cycle = detect_limit_cycle(traj, num.convergence_tol)
    return traj


def _sections_from_samples(t, s):
    y = s[:, 1].imag
    idx = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0]
    w = y[idx] / (y[idx] - y[idx + 1])
    times = t[idx] + w * (t[idx + 1] - t[idx])
    states = s[idx] + w[:, None] * (s[idx + 1] - s[idx])
    return times, states


def _fft_period(t, y):
    y = y - y.mean()
    n = len(y)
    if n < 8 or not np.any(y):
        return None
    spec = np.abs(np.fft.rfft(y * np.hanning(n)))
    k = int(np.argmax(spec[1:])) + 1
    shift = 0.0
    if 1 <= k < len(spec) - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        denom = a - 2 * b + c
        if denom != 0:
            shift = 0.5 * (a - c) / denom
    freq = (k + shift) / (n * (t[1] - t[0]))
    return 1.0 / freq if freq > 0 else None


def detect_limit_cycle(traj: ClassicalTrajectory, tol: float | None = None) -> LimitCycleInfo:
    """Classify the late-time behaviour of a trajectory.

    A fixed point is reported when the trailing half stays within ``tol``
    (relative to the trajectory's peak norm) of the final state. Otherwise
    the period comes from the dominant spectral peak of Im(beta_L) over the
    trailing half, and convergence is judged on the Poincare section
    Im(beta_L) = 0 (upward): successive section states one period apart must
    agree to ``tol`` in relative norm. ``transient_end`` is the first section
    time from which that holds for the rest of the trajectory.
    """
    if tol is None:
        tol = traj.config.numerics.convergence_tol if traj.config else 1e-6
    t, s = traj.times, traj.states
    omega = traj.config.left.omega_m if traj.config else 1.0
    if t[-1] - t[0] < 10 * 2 * math.pi / omega:
        raise ValueError("trajectory too short: need at least 10 mechanical periods")

    norms = np.linalg.norm(s, axis=1)
    scale = max(norms.max(), 1e-300)
    mid = t[0] + 0.5 * (t[-1] - t[0])
    tail = t >= mid
    dev = np.linalg.norm(s - s[-1], axis=1)
    if dev[tail].max() <= tol * scale:
        bad = np.nonzero(dev > tol * scale)[0]
        start = t[bad[-1] + 1] if len(bad) else t[0]
        return LimitCycleInfo(True, float(start), None, fixed_point=True)

    fft_period = _fft_period(t[tail], s[tail, 1].imag)

    if traj.section_times is not None and len(traj.section_times):
        sec_t, sec_s = traj.section_times, traj.section_states
    else:
        sec_t, sec_s = _sections_from_samples(t, s)
    if len(sec_t) < 4:
        return LimitCycleInfo(False, None, fft_period, fft_period=fft_period)

    mismatch = np.linalg.norm(np.diff(sec_s, axis=0), axis=1) / np.maximum(
        np.linalg.norm(sec_s[:-1], axis=1), 1e-300
    )
    ok = mismatch <= tol
    if not ok[-1]:
        return LimitCycleInfo(False, None, fft_period, fft_period=fft_period)
    failing = np.nonzero(~ok)[0]
    k0 = failing[-1] + 1 if len(failing) else 0
    if len(ok) - k0 < 3:
        return LimitCycleInfo(False, None, fft_period, fft_period=fft_period)
    period = float(np.mean(np.diff(sec_t[k0:])))
    return LimitCycleInfo(True, float(sec_t[k0]), period, fft_period=fft_period)


def phases(traj: ClassicalTrajectory, epsilon: float | None = None) -> np.ndarray:
    """Continuously unwrapped phases of the four amplitudes, shape ``(n, 4)``.

    Where a modulus drops below ``epsilon`` the previous phase is held
    (initially 0), so the cold start and undriven runs have zero phase.
    """
    if epsilon is None:
        epsilon = traj.config.numerics.phase_epsilon if traj.config else 1e-6
    s = traj.states
    raw = np.angle(s)
    live = np.abs(s) >= epsilon
    out = np.empty_like(raw)
    for j in range(s.shape[1]):
        held = _hold(raw[:, j], live[:, j])
        out[:, j] = np.unwrap(held)
    return out


def _hold(values, live):
    # forward-fill masked entries from the last live value, starting at 0
    idx = np.where(live, np.arange(len(values)), -1)
    np.maximum.accumulate(idx, out=idx)
    filled = np.where(idx >= 0, values[np.maximum(idx, 0)], 0.0)
    return filled


def write_trajectory_csv(traj: ClassicalTrajectory, path) -> None:
    header = ["t"]
    for label in STATE_LABELS:
        header += [f"{label}_re", f"{label}_im"]
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(traj.times, traj.states):
            cells = [repr(float(t))]
            for z in row:
                cells += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(cells)
