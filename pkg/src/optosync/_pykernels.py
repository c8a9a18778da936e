"""Pure-Python/numpy fallback for the compiled kernels in ``_core.pyx``.

Same signatures, same parameter/state layouts and the same arithmetic order
for the mean field, so the two backends agree to rounding. Much slower; used
when the extension is not built or ``OPTOSYNC_BACKEND=python`` is set.
"""
import math

import numpy as np


def _unpack(params):
    p = [float(v) for v in np.asarray(params, dtype=np.float64)]
    if len(p) != 14:
        raise ValueError("parameter vector must have length 14")
    uni = p[13] != 0.0
    link = 2.0 * math.sqrt(p[12] * p[4] * p[5]) if uni else 0.0
    return p, uni, link


def _make_rhs(params):
    p, uni, link = _unpack(params)
    wL, wR, gL_, gR_, kL, kR, gL, gR, d0L, d0R, E, lam = p[:12]
    cmL = complex(-gL_, -wL)
    cmR = complex(-gR_, -wR)
    hop = complex(0.0, lam)

    def rhs(s):
        aL, bL, aR, bR = s
        detL = d0L + gL * 2.0 * bL.real
        detR = d0R + gR * 2.0 * bR.real
        daL = complex(-kL, detL) * aL + E
        dbL = cmL * bL + complex(0.0, gL * (aL.real * aL.real + aL.imag * aL.imag))
        dbR = cmR * bR + complex(0.0, gR * (aR.real * aR.real + aR.imag * aR.imag))
        if uni:
            daR = complex(-kR, detR) * aR - link * aL
        else:
            daL = daL + hop * aR
            daR = complex(-kR, detR) * aR + hop * aL + E
        return (daL, dbL, daR, dbR)

    return rhs


def _rk4(rhs, s, h):
    k1 = rhs(s)
    k2 = rhs(tuple(s[i] + 0.5 * h * k1[i] for i in range(4)))
    k3 = rhs(tuple(s[i] + 0.5 * h * k2[i] for i in range(4)))
    k4 = rhs(tuple(s[i] + h * k3[i] for i in range(4)))
    return tuple(s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(4))


def _state_ok(s, guard):
    for z in s:
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return False
        if z.real * z.real + z.imag * z.imag > guard * guard:
            return False
    return True


def mean_field_rhs(state, params):
    rhs = _make_rhs(params)
    s = tuple(complex(z) for z in np.asarray(state, dtype=np.complex128))
    return np.array(rhs(s), dtype=np.complex128)


def drift(state, params):
    """Dense drift matrix; the kernel applies the same rows without forming it."""
    p, uni, link = _unpack(params)
    A = np.zeros((8, 8), dtype=np.complex128)
    s = np.asarray(state, dtype=np.complex128)
    for j in range(2):
        o = 4 * j
        a, b = s[2 * j], s[2 * j + 1]
        omega, gamma, kappa, g, d0 = p[j], p[2 + j], p[4 + j], p[6 + j], p[8 + j]
        det = d0 + g * 2.0 * b.real
        A[o, o] = complex(-kappa, det)
        A[o + 1, o + 1] = complex(-kappa, -det)
        A[o, o + 2] = A[o, o + 3] = 1j * g * a
        A[o + 1, o + 2] = A[o + 1, o + 3] = -1j * g * np.conj(a)
        A[o + 2, o + 2] = complex(-gamma, -omega)
        A[o + 3, o + 3] = complex(-gamma, omega)
        A[o + 2, o] = 1j * g * np.conj(a)
        A[o + 2, o + 1] = 1j * g * a
        A[o + 3, o] = -1j * g * np.conj(a)
        A[o + 3, o + 1] = -1j * g * a
    if uni:
        A[4, 0] = -link
        A[5, 1] = -link
    else:
        lam = p[11]
        A[0, 4] = A[4, 0] = 1j * lam
        A[1, 5] = A[5, 1] = -1j * lam
    return A


def covariance_rhs(state, params, C, D):
    A = drift(state, params)
    M = A @ np.asarray(C, dtype=np.complex128)
    K = M + M.conj().T + np.asarray(D, dtype=np.complex128)
    K[np.diag_indices(8)] = K.diagonal().real
    return K


def integrate_mean_field(params, state0, dt, n_steps, stride, guard, max_sections=-1):
    if stride < 1 or n_steps < 0:
        raise ValueError("stride must be >= 1 and n_steps >= 0")
    rhs = _make_rhs(params)
    n_samples = n_steps // stride + 1
    if max_sections < 0:
        max_sections = int(n_steps * dt / 2.0) + 16
    samples = np.empty((n_samples, 4), dtype=np.complex128)
    sec_t, sec_s = [], []
    s = tuple(complex(z) for z in np.asarray(state0, dtype=np.complex128))
    samples[0] = s
    status, fail_step = 0, -1
    for n in range(n_steps):
        prev = s
        s = _rk4(rhs, s, dt)
        if not _state_ok(s, guard):
            status, fail_step = 1, n + 1
            break
        if prev[1].imag < 0.0 and s[1].imag >= 0.0 and len(sec_t) < max_sections:
            lo, hi, flo, fhi = 0.0, 1.0, prev[1].imag, s[1].imag
            th, side, trial = 1.0, 0, s
            for _ in range(40):
                th = (lo * fhi - hi * flo) / (fhi - flo)
                trial = _rk4(rhs, prev, th * dt)
                fth = trial[1].imag
                if fth == 0.0 or hi - lo < 1e-15:
                    break
                if fth < 0.0:
                    lo, flo = th, fth
                    if side == -1:
                        fhi *= 0.5
                    side = -1
                else:
                    hi, fhi = th, fth
                    if side == 1:
                        flo *= 0.5
                    side = 1
                if abs(fth) <= 1e-13 * (1.0 + abs(trial[1])):
                    break
            sec_t.append((n + th) * dt)
            sec_s.append(trial)
        if (n + 1) % stride == 0:
            samples[(n + 1) // stride] = s
    sec_t = np.array(sec_t, dtype=np.float64)
    sec_s = np.array(sec_s, dtype=np.complex128).reshape(-1, 4)
    return samples, sec_t, sec_s, status, fail_step


def propagate(params, D, state0, C0, dt, n_steps, stride, guard, cov_guard):
    if stride < 1 or n_steps < 0:
        raise ValueError("stride must be >= 1 and n_steps >= 0")
    rhs = _make_rhs(params)
    D = np.asarray(D, dtype=np.complex128)
    n_samples = n_steps // stride + 1
    samples = np.empty((n_samples, 4), dtype=np.complex128)
    covs = np.empty((n_samples, 8, 8), dtype=np.complex128)
    s = tuple(complex(z) for z in np.asarray(state0, dtype=np.complex128))
    C = np.array(C0, dtype=np.complex128)
    samples[0], covs[0] = s, C
    h = dt
    iu = np.triu_indices(8, 1)
    status, fail_step = 0, -1
    for n in range(n_steps):
        k1 = rhs(s)
        s2 = tuple(s[i] + 0.5 * h * k1[i] for i in range(4))
        k2 = rhs(s2)
        s3 = tuple(s[i] + 0.5 * h * k2[i] for i in range(4))
        k3 = rhs(s3)
        s4 = tuple(s[i] + h * k3[i] for i in range(4))
        k4 = rhs(s4)
        K1 = covariance_rhs(s, params, C, D)
        K2 = covariance_rhs(s2, params, C + 0.5 * h * K1, D)
        K3 = covariance_rhs(s3, params, C + 0.5 * h * K2, D)
        K4 = covariance_rhs(s4, params, C + h * K3, D)
        C = C + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        C[np.diag_indices(8)] = C.diagonal().real
        C.T[iu] = C[iu].conj()
        s = tuple(s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(4))
        if not _state_ok(s, guard):
            status, fail_step = 1, n + 1
            break
        big = C.diagonal().real.max()
        if not big <= cov_guard:
            status, fail_step = 2, n + 1
            break
        if (n + 1) % stride == 0:
            samples[(n + 1) // stride] = s
            covs[(n + 1) // stride] = C
    return samples, covs, status, fail_step


__all__ = [
    "mean_field_rhs",
    "covariance_rhs",
    "integrate_mean_field",
    "propagate",
    "drift",
]
