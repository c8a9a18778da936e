"""Synchronization and correlation measures of the two mechanical modes.

Conventions: the covariance ``C`` is in the ladder basis of
:mod:`optosync.fluctuations`; quadratures are ``q = (b + b+)/sqrt 2`` and
``p = (b - b+)/(i sqrt 2)``; the real covariance ``sigma`` is scaled so the
vacuum is the identity. Logarithms are natural.

The phase-synchronization measure is half the inverse *variance* of
``p_- = (p_1 - p_2)/sqrt 2``; the mean of a fluctuation operator vanishes,
so the variance is the only meaningful reading.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import UnphysicalStateError
from .fluctuations import CovarianceSeries, to_quadratures
from .meanfield import ClassicalTrajectory, phases as classical_phases
from .model import SystemConfig
from .util import atomic_write

__all__ = [
    "VAR_FLOOR",
    "MeasureSeries",
    "TimeAverages",
    "rotation_frame",
    "rotate_covariance",
    "phase_sync",
    "mechanical_quadrature_cm",
    "symplectic_invariants",
    "symplectic_spectrum",
    "standard_form",
    "gaussian_discord",
    "log_negativity",
    "measure_series",
    "time_average",
    "write_measures_csv",
]

VAR_FLOOR = 1e-12
SYMMETRY_TOL = 1e-9
PHYSICAL_TOL = 1e-8
MECH = np.array([2, 3, 6, 7])


def rotation_frame(phi) -> np.ndarray:
    """Diagonal of ``U`` for phases ``(phi_aL, phi_bL, phi_aR, phi_bR)``.

    Works on a single phase vector or a stack of shape ``(n, 4)``.
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.repeat(phi, 2, axis=-1)
    theta[..., 1::2] *= -1.0
    return np.exp(-1j * theta)


def rotate_covariance(C, phi) -> np.ndarray:
    """``U C U^+`` with ``U = diag(rotation_frame(phi))``."""
    u = rotation_frame(phi)
    return u[..., :, None] * np.asarray(C) * np.conj(u)[..., None, :]


def phase_sync(Cp):
    """Return ``(S_p, var_p_minus)`` from a rotated covariance.

    The variance is read off the mechanical ladder entries::

        sigma_pjpk = (C_bj,bk - C_bj,bk+ - C_bj+,bk + C_bj+,bk+) / 2
        <dp_-^2>   = (sigma_p1p1 + sigma_p2p2 - 2 sigma_p1p2) / 4

    A variance within ``VAR_FLOOR`` of zero is capped there; a clearly
    negative one means the covariance is unphysical and raises.
    """
    Cp = np.asarray(Cp)

    def sig(j, k):
        return 0.5 * (Cp[..., j, k] - Cp[..., j, k + 1] - Cp[..., j + 1, k] + Cp[..., j + 1, k + 1]).real

    var = 0.25 * (sig(2, 2) + sig(6, 6) - 2.0 * sig(2, 6))
    if np.any(var < -VAR_FLOOR):
        raise UnphysicalStateError(f"negative phase-difference variance {np.min(var):.3g}")
    var = np.maximum(var, VAR_FLOOR)
    sp = 0.5 / var
    if np.ndim(var) == 0:
        return float(sp), float(var)
    return sp, var


def mechanical_quadrature_cm(Cp) -> np.ndarray:
    """4x4 quadrature covariance ``(q_1, p_1, q_2, p_2)`` of the mechanics."""
    Cp = np.asarray(Cp)
    block = Cp[..., MECH[:, None], MECH[None, :]]
    T = np.kron(np.eye(2), np.array([[1.0, 1.0], [-1j, 1j]]) / math.sqrt(2.0))
    full = T @ block @ T.conj().T
    scale = max(1.0, float(np.abs(full).max()))
    asym = np.abs(full - np.swapaxes(full, -1, -2)).max()
    if np.abs(full.imag).max() > SYMMETRY_TOL * scale or asym > SYMMETRY_TOL * scale:
        raise ValueError("mechanical covariance is not real symmetric")
    sigma = full.real
    return 0.5 * (sigma + np.swapaxes(sigma, -1, -2))


def symplectic_invariants(sigma):
    """``(I1, I2, I3, I4) = (det A, det B, det C, det sigma)`` of the 2x2 blocks."""
    s = np.asarray(sigma, dtype=float)

    def det2(m):
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]

    return det2(s[..., :2, :2]), det2(s[..., 2:, 2:]), det2(s[..., :2, 2:]), np.linalg.det(s)


def _entropy_fn(x):
    # f(x) = (x+1)/2 ln((x+1)/2) - (x-1)/2 ln((x-1)/2), f(1) = 0
    x = np.maximum(np.asarray(x, dtype=float), 1.0)
    hi = 0.5 * (x + 1.0)
    lo = 0.5 * (x - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo_term = np.where(lo > 0, lo * np.log(np.where(lo > 0, lo, 1.0)), 0.0)
    return hi * np.log(hi) - lo_term


def symplectic_spectrum(sigma):
    """Symplectic eigenvalues ``(nu_minus, nu_plus)`` of two-mode covariances.

    Uses the Hermitian matrix ``L^T (i Omega) L`` with ``sigma = L L^T``,
    whose eigenvalues are ``+-nu``; this stays accurate when the two
    eigenvalues coincide (pure states), where the invariant-based square
    root loses half the digits.
    """
    s = np.asarray(sigma, dtype=float)
    omega = 1j * np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    try:
        L = np.linalg.cholesky(s)
        ev = np.linalg.eigvalsh(np.swapaxes(L, -1, -2) @ omega @ L)
        nu = ev[..., 2:]
    except np.linalg.LinAlgError:
        # not positive definite: grossly unphysical, accuracy is moot
        nu = np.sort(np.abs(np.linalg.eigvals(omega @ s)), axis=-1)[..., ::2]
    return nu[..., 0], nu[..., 1]


def _inv_sqrt_unimodular(P):
    # P^(-1/2) for symmetric positive 2x2 blocks with det P = 1
    tr = P[..., 0, 0] + P[..., 1, 1]
    root = (P + np.eye(2)) / np.sqrt(tr + 2.0)[..., None, None]
    adj = np.empty_like(root)
    adj[..., 0, 0] = root[..., 1, 1]
    adj[..., 1, 1] = root[..., 0, 0]
    adj[..., 0, 1] = -root[..., 0, 1]
    adj[..., 1, 0] = -root[..., 1, 0]
    return adj


def standard_form(sigma):
    """Local-symplectic standard form ``(a, b, c1, c2)``.

    ``A -> a I``, ``B -> b I`` and ``C -> diag(c1, c2)`` with
    ``|c1| >= |c2|`` and ``c1 >= 0``; ``c1 c2 = det C``.
    """
    s = np.asarray(sigma, dtype=float)
    A, B, C = s[..., :2, :2], s[..., 2:, 2:], s[..., :2, 2:]
    a = np.sqrt(np.maximum(A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0], 1e-300))
    b = np.sqrt(np.maximum(B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0], 1e-300))
    Sa = _inv_sqrt_unimodular(A / a[..., None, None])
    Sb = _inv_sqrt_unimodular(B / b[..., None, None])
    Cs = Sa @ C @ Sb
    sv = np.linalg.svd(Cs, compute_uv=False)
    det = Cs[..., 0, 0] * Cs[..., 1, 1] - Cs[..., 0, 1] * Cs[..., 1, 0]
    c1 = sv[..., 0]
    c2 = np.where(det < 0, -sv[..., 1], sv[..., 1])
    return a, b, c1, c2


def _min_conditional_det(a, b, x, y):
    """Minimum over pure Gaussian measurements on mode 2 of the conditional det.

    In standard form the seed ``diag(l, 1/l)`` gives
    ``F(l) = (x + a l)(a + y l) / ((b + l)(1 + b l))`` with
    ``x = ab - c1^2``, ``y = ab - c2^2``. The minimum is at a stationary
    point (root of a quadratic) or at the homodyne limits ``l -> 0, oo``.
    Every factor of ``F`` is positive, so evaluation is cancellation free.
    """
    def F(l):
        return (x + a * l) * (a + y * l) / ((b + l) * (1.0 + b * l))

    best = np.minimum(a * x / b, a * y / b)
    q2 = a * y * (b * b + 1.0) - b * (a * a + x * y)
    q1 = 2.0 * a * b * (y - x)
    q0 = b * (a * a + x * y) - a * x * (b * b + 1.0)
    disc = np.sqrt(np.maximum(q1 * q1 - 4.0 * q2 * q0, 0.0))
    for sgn in (1.0, -1.0):
        with np.errstate(divide="ignore", invalid="ignore"):
            # numerically stable quadratic roots
            qq = -0.5 * (q1 + sgn * disc)
            for root in (qq / np.where(q2 != 0, q2, np.nan), q0 / np.where(qq != 0, qq, np.nan)):
                ok = np.isfinite(root) & (root > 0)
                best = np.where(ok, np.minimum(best, F(np.where(ok, root, 1.0))), best)
    return best


def _discord_core(sigma, measured_mode):
    s = np.asarray(sigma, dtype=float)
    if measured_mode == 1:
        perm = [2, 3, 0, 1]
        s = s[..., perm, :][..., :, perm]
    elif measured_mode != 2:
        raise ValueError("measured_mode must be 1 or 2")
    nu_m, nu_p = symplectic_spectrum(s)
    a, b, c1, c2 = standard_form(s)
    x = np.maximum(a * b - c1 * c1, 0.0)
    y = np.maximum(a * b - c2 * c2, 0.0)
    emin = _min_conditional_det(a, b, x, y)
    dg = _entropy_fn(b) - _entropy_fn(nu_m) - _entropy_fn(nu_p) + _entropy_fn(np.sqrt(np.maximum(emin, 1.0)))
    return np.maximum(dg, 0.0), nu_m


def _negativity_core(sigma):
    s = np.asarray(sigma, dtype=float)
    nu_m, _ = symplectic_spectrum(s)
    flip = np.array([1.0, 1.0, 1.0, -1.0])
    tilde, _ = symplectic_spectrum(s * flip[:, None] * flip[None, :])
    with np.errstate(divide="ignore"):
        en = np.maximum(0.0, -np.log(tilde))
    return en, nu_m


def _require_physical(nu_m):
    worst = float(np.min(nu_m))
    if worst < 1.0 - PHYSICAL_TOL:
        raise UnphysicalStateError(f"state violates uncertainty: nu_minus = {worst:.10g}", worst)


def gaussian_discord(sigma, measured_mode: int = 2):
    """Gaussian quantum discord with a Gaussian measurement on ``measured_mode``.

    Raises
    ------
    UnphysicalStateError
        If the smallest symplectic eigenvalue is below 1.
    """
    dg, nu_m = _discord_core(sigma, measured_mode)
    _require_physical(nu_m)
    return float(dg) if np.ndim(dg) == 0 else dg


def log_negativity(sigma):
    """Logarithmic negativity from the partially transposed symplectic spectrum."""
    en, nu_m = _negativity_core(sigma)
    _require_physical(nu_m)
    return float(en) if np.ndim(en) == 0 else en


@dataclass
class MeasureSeries:
    times: np.ndarray
    Sp: np.ndarray
    DG: np.ndarray
    EN: np.ndarray
    var_p_minus: np.ndarray
    DG_other: np.ndarray
    physical: np.ndarray
    discord_mode: int = 2


def measure_series(
    traj: ClassicalTrajectory, cov: CovarianceSeries, config: SystemConfig | None = None
) -> MeasureSeries:
    """Evaluate every measure at each covariance sample.

    Samples whose mechanical state is unphysical get NaN discord and
    negativity and ``physical = False``; ``S_p`` is always reported.
    """
    config = config or traj.config
    mode = config.numerics.discord_mode if config else 2
    phi = classical_phases(traj, config.numerics.phase_epsilon if config else None)
    if len(phi) != len(cov.times):
        raise ValueError("trajectory and covariance series are sampled differently")
    Cp = rotate_covariance(cov.covariances, phi)
    sp, var = phase_sync(Cp)
    sigma = mechanical_quadrature_cm(Cp)
    dg, nu_m = _discord_core(sigma, mode)
    dg_other, _ = _discord_core(sigma, 3 - mode)
    en, _ = _negativity_core(sigma)
    ok = nu_m >= 1.0 - PHYSICAL_TOL
    nan = np.full_like(dg, np.nan)
    return MeasureSeries(
        times=cov.times.copy(),
        Sp=sp,
        DG=np.where(ok, dg, nan),
        EN=np.where(ok, en, nan),
        var_p_minus=var,
        DG_other=np.where(ok, dg_other, nan),
        physical=ok,
        discord_mode=mode,
    )


@dataclass(frozen=True)
class TimeAverages:
    mean_Sp: float
    mean_DG: float
    mean_EN: float
    t_start: float
    t_stop: float


def _trapezoid_mean(t, x):
    if len(t) == 1:
        return float(x[0])
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return float(np.sum(w * x) / np.sum(w))


def time_average(series: MeasureSeries, transient_end: float, window: float) -> TimeAverages:
    """Trapezoidal means over ``[transient_end, transient_end + window]``."""
    t = series.times
    stop = transient_end + window
    slack = 1e-9 * max(1.0, abs(stop))
    if window <= 0 or transient_end < t[0] - slack or stop > t[-1] + slack:
        raise ValueError(
            f"averaging window [{transient_end}, {stop}] not covered by series [{t[0]}, {t[-1]}]"
        )
    m = (t >= transient_end - slack) & (t <= stop + slack)
    if m.sum() < 2:
        raise ValueError("averaging window contains fewer than two samples")
    tt = t[m]
    return TimeAverages(
        _trapezoid_mean(tt, series.Sp[m]),
        _trapezoid_mean(tt, series.DG[m]),
        _trapezoid_mean(tt, series.EN[m]),
        float(tt[0]),
        float(tt[-1]),
    )


def write_measures_csv(series: MeasureSeries, path, verbose: bool = False) -> None:
    header = ["t", "Sp", "DG", "EN", "var_p_minus"]
    if verbose:
        header += [f"DG_measure_mode{3 - series.discord_mode}"]
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, t in enumerate(series.times):
            row = [t, series.Sp[i], series.DG[i], series.EN[i], series.var_p_minus[i]]
            if verbose:
                row.append(series.DG_other[i])
            w.writerow([repr(float(v)) for v in row])
