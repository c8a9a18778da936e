# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernels for the mean-field and covariance dynamics.

Parameter vector layout (float64, length 14)::

    0 omega_L   1 omega_R   2 gamma_L   3 gamma_R   4 kappa_L   5 kappa_R
    6 g_L       7 g_R       8 delta0_L  9 delta0_R  10 drive   11 lambda
    12 eta      13 unidirectional flag (0 or 1)

State layout: (alpha_L, beta_L, alpha_R, beta_R).  Covariance rows/columns
follow (da_L, da_L^+, db_L, db_L^+, da_R, da_R^+, db_R, db_R^+).

The pure-Python module ``_pykernels`` mirrors this file operation by operation.
"""
import numpy as np
from libc.math cimport sqrt, isfinite

ctypedef double complex cplx

cdef struct Params:
    double omega[2]
    double gamma[2]
    double kappa[2]
    double g[2]
    double delta0[2]
    double drive
    double lam
    double link      # 2 sqrt(eta kappa_L kappa_R)
    bint uni


cdef Params _unpack(const double[:] p) except *:
    cdef Params q
    if p.shape[0] != 14:
        raise ValueError("parameter vector must have length 14")
    q.omega[0] = p[0]; q.omega[1] = p[1]
    q.gamma[0] = p[2]; q.gamma[1] = p[3]
    q.kappa[0] = p[4]; q.kappa[1] = p[5]
    q.g[0] = p[6]; q.g[1] = p[7]
    q.delta0[0] = p[8]; q.delta0[1] = p[9]
    q.drive = p[10]
    q.lam = p[11]
    q.uni = p[13] != 0.0
    q.link = 2.0 * sqrt(p[12] * p[4] * p[5]) if q.uni else 0.0
    return q


cdef inline cplx _c(double re, double im) noexcept nogil:
    cdef cplx z
    z.real = re
    z.imag = im
    return z


cdef inline double _abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline void _mf_rhs(const cplx* s, const Params* q, cplx* out) noexcept nogil:
    cdef cplx aL = s[0]
    cdef cplx bL = s[1]
    cdef cplx aR = s[2]
    cdef cplx bR = s[3]
    cdef double detL = q.delta0[0] + q.g[0] * 2.0 * bL.real
    cdef double detR = q.delta0[1] + q.g[1] * 2.0 * bR.real
    out[0] = _c(-q.kappa[0], detL) * aL + q.drive
    out[1] = _c(-q.gamma[0], -q.omega[0]) * bL + _c(0.0, q.g[0] * _abs2(aL))
    out[3] = _c(-q.gamma[1], -q.omega[1]) * bR + _c(0.0, q.g[1] * _abs2(aR))
    if q.uni:
        out[2] = _c(-q.kappa[1], detR) * aR - q.link * aL
    else:
        out[0] = out[0] + _c(0.0, q.lam) * aR
        out[2] = _c(-q.kappa[1], detR) * aR + _c(0.0, q.lam) * aL + q.drive


cdef inline void _rk4_step(cplx* s, const Params* q, double h, cplx* k1, cplx* k2,
                           cplx* k3, cplx* k4, cplx* tmp) noexcept nogil:
    # stage states are left in k-buffers' companions by the caller when needed
    cdef int i
    _mf_rhs(s, q, k1)
    for i in range(4):
        tmp[i] = s[i] + 0.5 * h * k1[i]
    _mf_rhs(tmp, q, k2)
    for i in range(4):
        tmp[i] = s[i] + 0.5 * h * k2[i]
    _mf_rhs(tmp, q, k3)
    for i in range(4):
        tmp[i] = s[i] + h * k3[i]
    _mf_rhs(tmp, q, k4)
    for i in range(4):
        s[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


cdef inline bint _state_ok(const cplx* s, double guard) noexcept nogil:
    cdef int i
    for i in range(4):
        if not (isfinite(s[i].real) and isfinite(s[i].imag)):
            return False
        if _abs2(s[i]) > guard * guard:
            return False
    return True


cdef void _cov_rhs(const cplx* s, const Params* q, const cplx* C, const cplx* D,
                   cplx* M, cplx* K) noexcept nogil:
    """K = A C + C A^+ + D for Hermitian C, with A(s) applied row by row."""
    cdef int j, o, l
    cdef cplx a, ac, ga, gac, diag_a, diag_ad, diag_b, diag_bd, hop, hopc
    cdef double det
    for j in range(2):
        o = 4 * j
        a = s[2 * j]
        ac = a.conjugate()
        det = q.delta0[j] + q.g[j] * 2.0 * s[2 * j + 1].real
        ga = _c(0.0, q.g[j]) * a          # i g alpha
        gac = _c(0.0, q.g[j]) * ac        # i g alpha*
        diag_a = _c(-q.kappa[j], det)
        diag_ad = _c(-q.kappa[j], -det)
        diag_b = _c(-q.gamma[j], -q.omega[j])
        diag_bd = _c(-q.gamma[j], q.omega[j])
        for l in range(8):
            M[o * 8 + l] = diag_a * C[o * 8 + l] + ga * (C[(o + 2) * 8 + l] + C[(o + 3) * 8 + l])
            M[(o + 1) * 8 + l] = diag_ad * C[(o + 1) * 8 + l] - gac * (C[(o + 2) * 8 + l] + C[(o + 3) * 8 + l])
            M[(o + 2) * 8 + l] = diag_b * C[(o + 2) * 8 + l] + gac * C[o * 8 + l] + ga * C[(o + 1) * 8 + l]
            M[(o + 3) * 8 + l] = diag_bd * C[(o + 3) * 8 + l] - gac * C[o * 8 + l] - ga * C[(o + 1) * 8 + l]
    if q.uni:
        for l in range(8):
            M[4 * 8 + l] = M[4 * 8 + l] - q.link * C[0 * 8 + l]
            M[5 * 8 + l] = M[5 * 8 + l] - q.link * C[1 * 8 + l]
    else:
        hop = _c(0.0, q.lam)
        hopc = _c(0.0, -q.lam)
        for l in range(8):
            M[0 * 8 + l] = M[0 * 8 + l] + hop * C[4 * 8 + l]
            M[1 * 8 + l] = M[1 * 8 + l] + hopc * C[5 * 8 + l]
            M[4 * 8 + l] = M[4 * 8 + l] + hop * C[0 * 8 + l]
            M[5 * 8 + l] = M[5 * 8 + l] + hopc * C[1 * 8 + l]
    for j in range(8):
        for l in range(j, 8):
            K[j * 8 + l] = M[j * 8 + l] + M[l * 8 + j].conjugate() + D[j * 8 + l]
            K[l * 8 + j] = K[j * 8 + l].conjugate()
        K[j * 8 + j] = _c(K[j * 8 + j].real, 0.0)


def mean_field_rhs(state, params):
    """Evaluate the noise-free mean-field right-hand side at ``state``."""
    cdef Params q = _unpack(np.ascontiguousarray(params, dtype=np.float64))
    cdef cplx[::1] s = np.ascontiguousarray(state, dtype=np.complex128)
    out = np.empty(4, dtype=np.complex128)
    cdef cplx[::1] o = out
    _mf_rhs(&s[0], &q, &o[0])
    return out


def covariance_rhs(state, params, C, D):
    """Evaluate ``A(state) C + C A(state)^+ + D`` for a Hermitian ``C``."""
    cdef Params q = _unpack(np.ascontiguousarray(params, dtype=np.float64))
    cdef cplx[::1] s = np.ascontiguousarray(state, dtype=np.complex128)
    cdef cplx[:, ::1] Cv = np.ascontiguousarray(C, dtype=np.complex128)
    cdef cplx[:, ::1] Dv = np.ascontiguousarray(D, dtype=np.complex128)
    M = np.empty((8, 8), dtype=np.complex128)
    K = np.empty((8, 8), dtype=np.complex128)
    cdef cplx[:, ::1] Mv = M
    cdef cplx[:, ::1] Kv = K
    _cov_rhs(&s[0], &q, &Cv[0, 0], &Dv[0, 0], &Mv[0, 0], &Kv[0, 0])
    return K


def integrate_mean_field(params, state0, double dt, long n_steps, long stride,
                         double guard, long max_sections=-1):
    """Fixed-step RK4 integration of the mean-field equations.

    Returns ``(samples, section_times, section_states, status, fail_step)``.
    ``samples[k]`` is the state after ``k * stride`` steps.  Sections are the
    upward zero crossings of Im(beta_L), located by regula falsi on a partial
    RK4 step.  ``status`` is 0 on success and 1 when the guard tripped.
    """
    cdef Params q = _unpack(np.ascontiguousarray(params, dtype=np.float64))
    if stride < 1 or n_steps < 0:
        raise ValueError("stride must be >= 1 and n_steps >= 0")
    cdef long n_samples = n_steps // stride + 1
    if max_sections < 0:
        max_sections = <long>(n_steps * dt / 2.0) + 16
    samples = np.empty((n_samples, 4), dtype=np.complex128)
    sec_t = np.empty(max_sections, dtype=np.float64)
    sec_s = np.empty((max_sections, 4), dtype=np.complex128)
    cdef cplx[:, ::1] smp = samples
    cdef double[::1] st = sec_t
    cdef cplx[:, ::1] ss = sec_s
    cdef cplx s[4]
    cdef cplx prev[4]
    cdef cplx trial[4]
    cdef cplx k1[4]
    cdef cplx k2[4]
    cdef cplx k3[4]
    cdef cplx k4[4]
    cdef cplx tmp[4]
    cdef cplx[::1] s0 = np.ascontiguousarray(state0, dtype=np.complex128)
    cdef long n, n_sec = 0
    cdef int i, it, side
    cdef int status = 0
    cdef long fail_step = -1
    cdef double lo, hi, flo, fhi, th, fth
    for i in range(4):
        s[i] = s0[i]
        smp[0, i] = s[i]
    with nogil:
        for n in range(n_steps):
            for i in range(4):
                prev[i] = s[i]
            _rk4_step(s, &q, dt, k1, k2, k3, k4, tmp)
            if not _state_ok(s, guard):
                status = 1
                fail_step = n + 1
                break
            if prev[1].imag < 0.0 and s[1].imag >= 0.0 and n_sec < max_sections:
                lo = 0.0
                hi = 1.0
                flo = prev[1].imag
                fhi = s[1].imag
                th = 1.0
                side = 0
                for it in range(40):
                    th = (lo * fhi - hi * flo) / (fhi - flo)
                    for i in range(4):
                        trial[i] = prev[i]
                    _rk4_step(trial, &q, th * dt, k1, k2, k3, k4, tmp)
                    fth = trial[1].imag
                    if fth == 0.0 or hi - lo < 1e-15:
                        break
                    if fth < 0.0:
                        lo = th
                        flo = fth
                        if side == -1:
                            fhi = 0.5 * fhi
                        side = -1
                    else:
                        hi = th
                        fhi = fth
                        if side == 1:
                            flo = 0.5 * flo
                        side = 1
                    if fth < 0.0:
                        fth = -fth
                    if fth <= 1e-13 * (1.0 + sqrt(_abs2(trial[1]))):
                        break
                st[n_sec] = (n + th) * dt
                for i in range(4):
                    ss[n_sec, i] = trial[i]
                n_sec += 1
            if (n + 1) % stride == 0:
                for i in range(4):
                    smp[(n + 1) // stride, i] = s[i]
    return samples, sec_t[:n_sec].copy(), sec_s[:n_sec].copy(), status, fail_step


def propagate(params, D, state0, C0, double dt, long n_steps, long stride,
              double guard, double cov_guard):
    """Co-integrate the mean field and the symmetrized covariance with RK4.

    The drift at each RK4 stage is built from the matching mean-field stage
    state, so the classical path is bit-identical to ``integrate_mean_field``.
    Returns ``(samples, covariances, status, fail_step)``; status 1 flags a
    mean-field blow-up, 2 a covariance blow-up.
    """
    cdef Params q = _unpack(np.ascontiguousarray(params, dtype=np.float64))
    if stride < 1 or n_steps < 0:
        raise ValueError("stride must be >= 1 and n_steps >= 0")
    cdef long n_samples = n_steps // stride + 1
    samples = np.empty((n_samples, 4), dtype=np.complex128)
    covs = np.empty((n_samples, 8, 8), dtype=np.complex128)
    cdef cplx[:, ::1] smp = samples
    cdef cplx[:, :, ::1] cv = covs
    cdef cplx[:, ::1] Dv = np.ascontiguousarray(D, dtype=np.complex128)
    cdef cplx[:, ::1] C0v = np.ascontiguousarray(C0, dtype=np.complex128)
    cdef cplx[::1] s0 = np.ascontiguousarray(state0, dtype=np.complex128)
    cdef cplx s[4]
    cdef cplx s2[4]
    cdef cplx s3[4]
    cdef cplx s4[4]
    cdef cplx k1[4]
    cdef cplx k2[4]
    cdef cplx k3[4]
    cdef cplx k4[4]
    cdef cplx C[64]
    cdef cplx Cx[64]
    cdef cplx M[64]
    cdef cplx K1[64]
    cdef cplx K2[64]
    cdef cplx K3[64]
    cdef cplx K4[64]
    cdef long n
    cdef int i, j
    cdef int status = 0
    cdef long fail_step = -1
    cdef double h = dt
    cdef double big
    for i in range(4):
        s[i] = s0[i]
        smp[0, i] = s[i]
    for i in range(8):
        for j in range(8):
            C[i * 8 + j] = C0v[i, j]
            cv[0, i, j] = C[i * 8 + j]
    with nogil:
        for n in range(n_steps):
            _mf_rhs(s, &q, k1)
            for i in range(4):
                s2[i] = s[i] + 0.5 * h * k1[i]
            _mf_rhs(s2, &q, k2)
            for i in range(4):
                s3[i] = s[i] + 0.5 * h * k2[i]
            _mf_rhs(s3, &q, k3)
            for i in range(4):
                s4[i] = s[i] + h * k3[i]
            _mf_rhs(s4, &q, k4)

            _cov_rhs(s, &q, C, &Dv[0, 0], M, K1)
            for i in range(64):
                Cx[i] = C[i] + 0.5 * h * K1[i]
            _cov_rhs(s2, &q, Cx, &Dv[0, 0], M, K2)
            for i in range(64):
                Cx[i] = C[i] + 0.5 * h * K2[i]
            _cov_rhs(s3, &q, Cx, &Dv[0, 0], M, K3)
            for i in range(64):
                Cx[i] = C[i] + h * K3[i]
            _cov_rhs(s4, &q, Cx, &Dv[0, 0], M, K4)
            for i in range(64):
                C[i] = C[i] + (h / 6.0) * (K1[i] + 2.0 * K2[i] + 2.0 * K3[i] + K4[i])
            # re-symmetrize: mirror the upper triangle, real diagonal
            big = 0.0
            for i in range(8):
                C[i * 8 + i] = _c(C[i * 8 + i].real, 0.0)
                if not isfinite(C[i * 8 + i].real):
                    big = cov_guard * 2.0 + 1.0
                elif C[i * 8 + i].real > big:
                    big = C[i * 8 + i].real
                for j in range(i + 1, 8):
                    C[j * 8 + i] = C[i * 8 + j].conjugate()
            for i in range(4):
                s[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not _state_ok(s, guard):
                status = 1
                fail_step = n + 1
                break
            if not (big <= cov_guard):
                status = 2
                fail_step = n + 1
                break
            if (n + 1) % stride == 0:
                for i in range(4):
                    smp[(n + 1) // stride, i] = s[i]
                for i in range(8):
                    for j in range(8):
                        cv[(n + 1) // stride, i, j] = C[i * 8 + j]
    return samples, covs, status, fail_step
