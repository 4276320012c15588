# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled time-stepping kernel (same update rule as ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, fmin, fmax, sqrt, INFINITY

STATUS_OK = 0
STATUS_DT_UNDERFLOW = 1

cdef int _OK = 0
cdef int _DT_UNDERFLOW = 1


cdef inline double cap_value(double xi, double a, double lam) nogil:
    cdef double u
    if xi <= a:
        return xi
    u = (xi - a) / lam
    return a + lam * u / sqrt(1.0 + u * u)


cdef inline double cap_deriv(double xi, double a, double lam) nogil:
    cdef double u, q
    if xi <= a:
        return 1.0
    u = (xi - a) / lam
    q = 1.0 + u * u
    return 1.0 / (q * sqrt(q))


def advance(double[::1] w, const double[::1] s, const double[::1] hl,
            const double[::1] hr, const double[::1] dcoef,
            const double[::1] cl, const double[::1] cc, const double[::1] cr,
            double n, double mu, double mass_fraction,
            double cap_a, double cap_lam, int left_mode,
            double t, double t_goal, double safety, double dt_max,
            double dt_floor, const double[::1] extrap_w, source_fn=None):
    """In-place multistep advance; mirrors ``_kernels_py.advance``.

    ``source_fn`` is not supported here (the python kernel handles it); it is
    accepted for signature compatibility and must be None.
    """
    if source_fn is not None:
        raise ValueError("compiled kernel does not take a source term")

    cdef Py_ssize_t M = w.shape[0]
    cdef Py_ssize_t K = M - 2
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.empty(5 * K, dtype=np.float64)
    cdef double[::1] diag = scratch[0:K]
    cdef double[::1] sup = scratch[K:2 * K]
    cdef double[::1] rhs = scratch[2 * K:3 * K]
    cdef double[::1] beta = scratch[3 * K:4 * K]
    cdef double[::1] wind = scratch[4 * K:5 * K]

    cdef long steps = 0
    cdef double clipped = 0.0
    cdef double dt_min_used = INFINITY
    cdef double dt_max_used = 0.0
    cdef double tiny = 1e-15 * fmax(1.0, fabs(t_goal))
    cdef double wl, dt, dt_cfl, ws_c, a_i, dup, tr, dd, bli, bri, m, x, hmin
    cdef double lo_exc, hi_exc
    cdef Py_ssize_t i
    cdef int status = _OK

    with nogil:
        while t < t_goal - tiny:
            if left_mode == 1:
                wl = extrap_w[0] * w[1] + extrap_w[1] * w[2] + extrap_w[2] * w[3]
            else:
                wl = 0.0
            w[0] = wl
            w[M - 1] = mass_fraction

            dt_cfl = INFINITY
            for i in range(K):
                ws_c = cl[i] * w[i] + cc[i] * w[i + 1] + cr[i] * w[i + 2]
                a_i = n * w[i + 1] * cap_deriv(ws_c, cap_a, cap_lam) - mu * s[i + 1]
                wind[i] = a_i
                a_i = fabs(a_i)
                if a_i > 0.0:
                    hmin = fmin(hl[i], hr[i])
                    if hmin / a_i < dt_cfl:
                        dt_cfl = hmin / a_i
            dt = fmin(fmin(safety * dt_cfl, dt_max), t_goal - t)
            if dt < dt_floor:
                status = _DT_UNDERFLOW
                break

            for i in range(K):
                if wind[i] >= 0.0:
                    dup = (w[i + 2] - w[i + 1]) / hr[i]
                else:
                    dup = (w[i + 1] - w[i]) / hl[i]
                tr = n * w[i + 1] * cap_value(dup, cap_a, cap_lam) - mu * s[i + 1] * dup
                rhs[i] = w[i + 1] + dt * tr
                dd = dt * dcoef[i]
                bli = 2.0 / (hl[i] * (hl[i] + hr[i]))
                bri = 2.0 / (hr[i] * (hl[i] + hr[i]))
                diag[i] = 1.0 + dd * (bli + bri)
                sup[i] = -dd * bri
                if i == 0:
                    rhs[0] += dd * bli * wl
                    beta[0] = -dd * bli  # unused slot, keeps layout simple
                else:
                    beta[i] = -dd * bli  # sub-diagonal entry for row i
            rhs[K - 1] += dt * dcoef[K - 1] * (2.0 / (hr[K - 1] * (hl[K - 1] + hr[K - 1]))) * mass_fraction

            # Thomas elimination (no pivoting; rows are diagonally dominant)
            for i in range(1, K):
                m = beta[i] / diag[i - 1]
                diag[i] = diag[i] - m * sup[i - 1]
                rhs[i] = rhs[i] - m * rhs[i - 1]
            lo_exc = 0.0
            hi_exc = 0.0
            x = rhs[K - 1] / diag[K - 1]
            if x < 0.0:
                if -x > lo_exc:
                    lo_exc = -x
                x = 0.0
            elif x > mass_fraction:
                if x - mass_fraction > hi_exc:
                    hi_exc = x - mass_fraction
                x = mass_fraction
            w[M - 2] = x
            for i in range(K - 2, -1, -1):
                x = (rhs[i] - sup[i] * w[i + 2]) / diag[i]
                if x < 0.0:
                    if -x > lo_exc:
                        lo_exc = -x
                    x = 0.0
                elif x > mass_fraction:
                    if x - mass_fraction > hi_exc:
                        hi_exc = x - mass_fraction
                    x = mass_fraction
                w[i + 1] = x
            clipped += lo_exc + hi_exc

            if left_mode == 1:
                wl = extrap_w[0] * w[1] + extrap_w[1] * w[2] + extrap_w[2] * w[3]
                wl = fmin(fmax(wl, 0.0), mass_fraction)
            else:
                wl = 0.0
            w[0] = wl
            w[M - 1] = mass_fraction

            t = t + dt
            steps += 1
            if dt < dt_min_used:
                dt_min_used = dt
            if dt > dt_max_used:
                dt_max_used = dt

    if status == _OK:
        t = t_goal
    return t, steps, clipped, dt_min_used, dt_max_used, status
