"""Linearized quantum fluctuations around the classical trajectory.

Operator ordering of the fluctuation vector ``R`` (conjugate pairs adjacent)::

    0 da_L   1 da_L+   2 db_L   3 db_L+   4 da_R   5 da_R+   6 db_R   7 db_R+

The covariance is the symmetrized moment ``C_il = <R_i R_l^+ + R_l^+ R_i>``
without a factor 1/2, so an optical vacuum has unit diagonal. It obeys
``dC/dt = A C + C A^+ + D`` with ``D = B Sigma B^+``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DivergenceError
from .meanfield import DIVERGENCE_GUARD, ClassicalTrajectory
from .model import SystemConfig, Unidirectional, kernel_params
from .util import atomic_write

__all__ = [
    "BASIS",
    "CONJUGATE",
    "COVARIANCE_GUARD",
    "NoiseModel",
    "CovarianceSeries",
    "PhysicalityReport",
    "drift_matrix",
    "noise_model",
    "initial_covariance",
    "covariance_rhs",
    "propagate",
    "quadrature_transform",
    "symplectic_form",
    "physicality_check",
    "write_covariance_csv",
]

BASIS = ("da_L", "da_L+", "db_L", "db_L+", "da_R", "da_R+", "db_R", "db_R+")
CONJUGATE = np.array([1, 0, 3, 2, 5, 4, 7, 6])
COVARIANCE_GUARD = 1e12
HERMITIAN_TOL = 1e-9


def drift_matrix(state, config: SystemConfig) -> np.ndarray:
    """Drift matrix ``A`` of the linearized equations at one classical state."""
    a = np.asarray(state, dtype=np.complex128)
    A = np.zeros((8, 8), dtype=np.complex128)
    for j, osc in enumerate((config.left, config.right)):
        o = 4 * j
        alpha, beta = a[2 * j], a[2 * j + 1]
        detuning = osc.detuning + osc.g * (beta + np.conj(beta)).real
        ig_alpha = 1j * osc.g * alpha
        ig_alpha_c = 1j * osc.g * np.conj(alpha)
        # cavity: (-kappa + i Delta) da + i g alpha (db + db+)
        A[o, o] = -osc.kappa + 1j * detuning
        A[o, o + 2] = A[o, o + 3] = ig_alpha
        A[o + 1, o + 1] = -osc.kappa - 1j * detuning
        A[o + 1, o + 2] = A[o + 1, o + 3] = np.conj(ig_alpha)
        # mechanics: (-gamma - i omega) db + i g (alpha* da + alpha da+)
        A[o + 2, o + 2] = -osc.gamma - 1j * osc.omega_m
        A[o + 2, o] = ig_alpha_c
        A[o + 2, o + 1] = ig_alpha
        A[o + 3, o + 3] = -osc.gamma + 1j * osc.omega_m
        A[o + 3, o] = np.conj(ig_alpha)
        A[o + 3, o + 1] = np.conj(ig_alpha_c)
    topo = config.topology
    if isinstance(topo, Unidirectional):
        link = 2.0 * math.sqrt(topo.eta * config.left.kappa * config.right.kappa)
        A[4, 0] = -link
        A[5, 1] = -link
    else:
        A[0, 4] = A[4, 0] = 1j * topo.lam
        A[1, 5] = A[5, 1] = -1j * topo.lam
    return A


@dataclass(frozen=True)
class NoiseModel:
    """Noise input matrix ``B`` (8 x m), its correlations ``sigma`` and ``D``."""

    B: np.ndarray
    sigma: np.ndarray
    D: np.ndarray
    inputs: tuple[str, ...]


def noise_model(config: SystemConfig) -> NoiseModel:
    """Input-noise structure of the linearized equations.

    Bidirectional: four independent baths (two optical vacua, two thermal
    mechanical baths). Unidirectional: the left optical input also feeds the
    right cavity, giving correlated optical diffusion; with ``vacuum_topup``
    an extra vacuum port restores the right cavity's total input to
    ``2 kappa_R``.
    """
    left, right = config.left, config.right
    thermal = 2.0 * config.bath.n_th + 1.0
    topo = config.topology
    if isinstance(topo, Unidirectional):
        inputs = ["ain_L", "ain_L+", "bin_L", "bin_L+", "bin_R", "bin_R+"]
        if topo.vacuum_topup:
            inputs += ["vin_R", "vin_R+"]
        B = np.zeros((8, len(inputs)))
        B[0, 0] = B[1, 1] = math.sqrt(2 * left.kappa)
        B[2, 2] = B[3, 3] = math.sqrt(2 * left.gamma)
        B[4, 0] = B[5, 1] = math.sqrt(2 * topo.eta * right.kappa)
        B[6, 4] = B[7, 5] = math.sqrt(2 * right.gamma)
        if topo.vacuum_topup:
            B[4, 6] = B[5, 7] = math.sqrt(2 * (1 - topo.eta) * right.kappa)
        sig = np.ones(len(inputs))
        sig[2:6] = thermal
    else:
        inputs = ["ain_L", "ain_L+", "bin_L", "bin_L+", "ain_R", "ain_R+", "bin_R", "bin_R+"]
        B = np.diag(np.sqrt([2 * left.kappa] * 2 + [2 * left.gamma] * 2 + [2 * right.kappa] * 2 + [2 * right.gamma] * 2))
        sig = np.array([1, 1, thermal, thermal, 1, 1, thermal, thermal], dtype=float)
    B = B.astype(np.complex128)
    sigma = np.diag(sig).astype(np.complex128)
    D = B @ sigma @ B.conj().T
    return NoiseModel(B, sigma, D, tuple(inputs))


def initial_covariance(config: SystemConfig) -> np.ndarray:
    """Optical vacuum and mechanical thermal state at the bath occupation."""
    m = 2.0 * config.bath.n_th + 1.0
    return np.diag([1.0, 1.0, m, m, 1.0, 1.0, m, m]).astype(np.complex128)


def covariance_rhs(C, A, D) -> np.ndarray:
    """``A C + C A^+ + D``."""
    C = np.asarray(C)
    A = np.asarray(A)
    return A @ C + C @ A.conj().T + D


@dataclass
class CovarianceSeries:
    times: np.ndarray
    covariances: np.ndarray
    states: np.ndarray


def propagate(
    config: SystemConfig,
    traj: ClassicalTrajectory,
    *,
    C0: np.ndarray | None = None,
) -> CovarianceSeries:
    """Propagate ``C(t)`` alongside the classical trajectory.

    The mean field is re-integrated in lock step with the covariance so
    each RK4 stage of the covariance sees the matching classical stage
    state. The re-integrated path must reproduce ``traj`` sample for sample.

    Raises
    ------
    DivergenceError
        When the covariance (a linearly unstable operating point) or the
        mean field exceeds its guard.
    """
    if traj.times[0] != 0.0 or np.any(traj.states[0] != 0):
        raise ValueError("trajectory must start from the cold-start origin at t=0")
    dt, stride = traj.dt, traj.stride
    n_steps = (len(traj.times) - 1) * stride
    C0 = initial_covariance(config) if C0 is None else np.asarray(C0, dtype=np.complex128)
    D = noise_model(config).D
    samples, covs, status, fail = kernels.propagate(
        kernel_params(config), D, traj.states[0], C0, dt, n_steps, stride,
        DIVERGENCE_GUARD, COVARIANCE_GUARD,
    )
    if status == 1:
        raise DivergenceError("mean-field integration", fail * dt)
    if status == 2:
        raise DivergenceError("covariance propagation", fail * dt, "linearized dynamics unstable")
    scale = max(np.abs(traj.states).max(), 1.0)
    if np.abs(samples - traj.states).max() > 1e-9 * scale:
        raise ValueError("trajectory does not belong to this config")
    return CovarianceSeries(traj.times.copy(), covs, samples)


# -- quadratures and physicality ----------------------------------------
_PAIR = np.array([[1.0, 1.0], [-1j, 1j]]) / math.sqrt(2.0)


def quadrature_transform(n_modes: int) -> np.ndarray:
    """Unitary mapping ladder pairs ``(b, b+)`` to quadratures ``(q, p)``."""
    return np.kron(np.eye(n_modes), _PAIR)


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def to_quadratures(C: np.ndarray) -> np.ndarray:
    """Real quadrature covariance (vacuum = identity) of a ladder-basis ``C``."""
    n = C.shape[-1] // 2
    T = quadrature_transform(n)
    return (T @ C @ T.conj().T).real


@dataclass(frozen=True)
class PhysicalityReport:
    min_uncertainty_eig: float
    physical: bool


def _check_hermitian(C):
    err = np.abs(C - np.swapaxes(C.conj(), -1, -2)).max()
    if err > HERMITIAN_TOL * max(1.0, np.abs(C).max()):
        raise ValueError(f"covariance is not Hermitian (max deviation {err:.3g})")


def physicality_check(C: np.ndarray, tol: float = 1e-8) -> PhysicalityReport:
    """Smallest eigenvalue of ``sigma + i Omega``; physical iff >= -tol.

    Accepts a single matrix or a stack; for a stack the worst sample is
    reported. The tolerance grows with the matrix scale to absorb rounding.
    """
    C = np.asarray(C, dtype=np.complex128)
    _check_hermitian(C)
    n = C.shape[-1] // 2
    sigma = to_quadratures(C)
    M = sigma + 1j * symplectic_form(n)
    eig = np.linalg.eigvalsh(M)
    worst = float(eig.min())
    bound = tol * max(1.0, 1e-4 * float(np.abs(sigma).max()))
    return PhysicalityReport(worst, worst >= -bound)


def write_covariance_csv(series: CovarianceSeries, path) -> None:
    """Row-major snapshots, real and imaginary parts interleaved."""
    header = ["t"]
    for i in range(8):
        for l in range(8):
            header += [f"C{i}{l}_re", f"C{i}{l}_im"]
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, C in zip(series.times, series.covariances):
            flat = C.reshape(-1)
            cells = [repr(float(t))]
            for z in flat:
                cells += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(cells)
