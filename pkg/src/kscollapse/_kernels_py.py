"""Reference (numpy) time-stepping kernel.

One `advance` call integrates the capped system from ``t`` to ``t_goal`` with
adaptive steps: implicit degenerate diffusion (tridiagonal solve), explicit
first-order upwinded transport with the step bounded by the advective CFL
limit.  The compiled kernel in ``_kernels_cy`` implements the same update; a
parity test keeps the two interchangeable.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

STATUS_OK = 0
STATUS_DT_UNDERFLOW = 1

_dgtsv = lapack.get_lapack_funcs(("gtsv",), (np.empty(1, float),))[0]


def _cap_value(xi, cap_a, cap_lam):
    if not np.isfinite(cap_a):
        return xi
    u = np.maximum(xi - cap_a, 0.0) / cap_lam
    return np.where(xi <= cap_a, xi, cap_a + cap_lam * u / np.sqrt(1.0 + u * u))


def _cap_deriv(xi, cap_a, cap_lam):
    if not np.isfinite(cap_a):
        return np.ones_like(xi)
    u = np.maximum(xi - cap_a, 0.0) / cap_lam
    return np.where(xi <= cap_a, 1.0, (1.0 + u * u) ** -1.5)


def advance(w, s, hl, hr, dcoef, cl, cc, cr,
            n, mu, mass_fraction, cap_a, cap_lam, left_mode,
            t, t_goal, safety, dt_max, dt_floor,
            extrap_w, source_fn=None):
    """Advance ``w`` in place from ``t`` to ``t_goal``.

    Returns ``(t, steps, clipped, dt_min_used, dt_max_used, status)`` with
    ``clipped`` the accumulated out-of-bounds excursion (in w units).
    """
    M = w.size
    si = s[1:-1]
    h_min_local = np.minimum(hl, hr)
    bl = 2.0 / (hl * (hl + hr))
    br = 2.0 / (hr * (hl + hr))
    bcn = bl + br  # = 2/(hl*hr), the negated central weight

    steps = 0
    clipped = 0.0
    dt_min_used = np.inf
    dt_max_used = 0.0
    tiny = 1e-15 * max(1.0, abs(t_goal))

    while t < t_goal - tiny:
        if left_mode == 1:
            w[0] = extrap_w[0] * w[1] + extrap_w[1] * w[2] + extrap_w[2] * w[3]
        else:
            w[0] = 0.0
        w[-1] = mass_fraction

        wi = w[1:-1]
        ws_c = cl * w[:-2] + cc * wi + cr * w[2:]
        wind = n * wi * _cap_deriv(ws_c, cap_a, cap_lam) - mu * si
        amax = np.abs(wind)
        with np.errstate(divide="ignore"):
            dt_cfl = float(np.min(np.where(amax > 0.0, h_min_local / np.maximum(amax, 1e-300), np.inf)))
        dt = min(safety * dt_cfl, dt_max, t_goal - t)
        if dt < dt_floor:
            return t, steps, clipped, dt_min_used, dt_max_used, STATUS_DT_UNDERFLOW

        fwd = (w[2:] - wi) / hr
        bwd = (wi - w[:-2]) / hl
        dup = np.where(wind >= 0.0, fwd, bwd)
        transport = n * wi * _cap_value(dup, cap_a, cap_lam) - mu * si * dup
        rhs = wi + dt * transport
        if source_fn is not None:
            rhs = rhs + dt * source_fn(si, t)

        dd = dt * dcoef
        diag = 1.0 + dd * bcn
        sub = -(dd * bl)[1:]
        sup = -(dd * br)[:-1]
        rhs[0] += dd[0] * bl[0] * w[0]
        rhs[-1] += dd[-1] * br[-1] * mass_fraction

        _, _, _, x, info = _dgtsv(sub, diag, sup, rhs, overwrite_dl=True,
                                  overwrite_d=True, overwrite_du=True,
                                  overwrite_b=True)
        if info != 0:
            raise np.linalg.LinAlgError(f"tridiagonal solve failed (info={info})")

        lo_exc = max(0.0, -float(np.min(x)))
        hi_exc = max(0.0, float(np.max(x)) - mass_fraction)
        clipped += lo_exc + hi_exc
        np.clip(x, 0.0, mass_fraction, out=x)
        w[1:-1] = x
        if left_mode == 1:
            w[0] = extrap_w[0] * w[1] + extrap_w[1] * w[2] + extrap_w[2] * w[3]
            w[0] = min(max(w[0], 0.0), mass_fraction)
        else:
            w[0] = 0.0
        w[-1] = mass_fraction

        t = t + dt
        steps += 1
        dt_min_used = min(dt_min_used, dt)
        dt_max_used = max(dt_max_used, dt)

    return t_goal, steps, clipped, dt_min_used, dt_max_used, STATUS_OK
