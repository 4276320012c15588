"""Brute-force explicit reference solver and convergence studies.

This module is the independent check on the main stepper: forward Euler in
time, centered differences in space, no operator splitting, no upwinding and
no clipping (bound violations are reported, never repaired).  The operator
assembly here is written out from scratch on purpose; it shares no stepping
code with ``solver``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import DIRICHLET_ZERO, FREE, Grid, WField
from .initial import InitialData
from .params import ProblemParams
from .solver import RegularizationParams, Trajectory, make_initial_field


class StabilityError(RuntimeError):
    pass


def _central_weights(s: np.ndarray):
    hl = s[1:-1] - s[:-2]
    hr = s[2:] - s[1:-1]
    a_l = -hr / (hl * (hl + hr))
    a_c = (hr - hl) / (hl * hr)
    a_r = hl / (hr * (hl + hr))
    b_l = 2.0 / (hl * (hl + hr))
    b_c = -2.0 / (hl * hr)
    b_r = 2.0 / (hr * (hl + hr))
    return (a_l, a_c, a_r), (b_l, b_c, b_r)


def explicit_rhs(field: WField, reg: RegularizationParams, params: ProblemParams,
                 source: Callable | None = None) -> np.ndarray:
    """Centered-difference right-hand side at all nodes (zero at the ends)."""
    s = field.grid.nodes
    w = field.w
    (al, ac, ar), (bl, bc, br) = _central_weights(s)
    ws = al * w[:-2] + ac * w[1:-1] + ar * w[2:]
    wss = bl * w[:-2] + bc * w[1:-1] + br * w[2:]
    cap = reg.cap()
    si = s[1:-1]
    dcoef = reg.nu + params.n**2 * si ** (2.0 - 2.0 / params.n)
    rhs = np.zeros_like(w)
    rhs[1:-1] = dcoef * wss + params.n * w[1:-1] * cap(ws) - params.mu * si * ws
    if source is not None:
        rhs[1:-1] += source(si, field.t)
    return rhs


def stability_limit(grid: Grid, reg: RegularizationParams, params: ProblemParams) -> float:
    """Forward-Euler diffusion bound ``min_i ds_i^2 / (2 (nu + n^2 s^(2-2/n)))``."""
    s = grid.nodes
    h = np.minimum(np.diff(s)[:-1], np.diff(s)[1:])
    dcoef = reg.nu + params.n**2 * s[1:-1] ** (2.0 - 2.0 / params.n)
    return float(np.min(h * h / (2.0 * np.maximum(dcoef, 1e-300))))


def explicit_reference(params: ProblemParams, reg: RegularizationParams, grid: Grid,
                       initial: InitialData | WField, dt: float, t_end: float,
                       output_times: Sequence[float] | None = None,
                       n_outputs: int = 8, left_mode: str = DIRICHLET_ZERO,
                       source: Callable | None = None) -> Trajectory:
    """Forward-Euler centered-difference integration (the oracle run)."""
    limit = stability_limit(grid, reg, params)
    if dt > limit:
        raise StabilityError(f"dt={dt:g} above the explicit bound {limit:g}")
    if isinstance(initial, WField):
        fld = initial.copy()
        left_mode = fld.left_mode
    else:
        fld = make_initial_field(initial, grid, reg, left_mode)

    if output_times is None:
        output_times = np.linspace(0.0, t_end, n_outputs + 1) if t_end > 0.0 else [0.0]
    output_times = np.asarray(sorted(set(float(t) for t in output_times)))

    s = grid.nodes
    w = fld.w.copy()
    traj = Trajectory(params, reg, grid, left_mode)
    violation = 0.0

    x1, x2, x3 = s[1], s[2], s[3]
    x0 = s[0]
    e0 = (x0 - x2) * (x0 - x3) / ((x1 - x2) * (x1 - x3))
    e1 = (x0 - x1) * (x0 - x3) / ((x2 - x1) * (x2 - x3))
    e2 = (x0 - x1) * (x0 - x2) / ((x3 - x1) * (x3 - x2))

    def record(t, steps):
        exc = max(0.0, -float(np.min(w)),
                  float(np.max(w)) - params.mass_fraction)
        traj.snapshot(t, w, {
            "steps": steps, "dt_min": dt, "dt_max": dt,
            "clipped_mass": 0.0,
            "mass_defect": abs(params.omega_n * w[-1] - params.m),
            "min_slope": float(np.min(np.diff(w) / np.diff(s))),
            "theta": 0.0, "theta_residual": max(violation, exc),
        })

    record(0.0, 0)
    t = 0.0
    for t_goal in output_times[output_times > 0.0]:
        steps = 0
        while t < t_goal - 1e-15 * max(1.0, t_goal):
            h = min(dt, t_goal - t)
            f = WField(grid, w, t, left_mode)
            rhs = explicit_rhs(f, reg, params, source)
            w[1:-1] += h * rhs[1:-1]
            if left_mode == FREE:
                w[0] = e0 * w[1] + e1 * w[2] + e2 * w[3]
            else:
                w[0] = 0.0
            w[-1] = params.mass_fraction
            violation = max(violation, -float(np.min(w)),
                            float(np.max(w)) - params.mass_fraction)
            t += h
            steps += 1
        t = float(t_goal)
        record(t, steps)
    return traj


@dataclass
class StudyResult:
    errors: list
    orders: list
    flags: list = field(default_factory=list)

    @property
    def observed_order(self) -> float:
        return min(self.orders) if self.orders else float("nan")


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> StudyResult:
    """Richardson-style orders from errors on successively refined levels."""
    errors = [float(e) for e in errors]
    orders = []
    flags = []
    for a, b in zip(errors, errors[1:]):
        if b <= 0.0 or a <= 0.0:
            flags.append("zero error level: order undefined")
            continue
        if b >= a:
            flags.append(f"non-monotone error pair ({a:g} -> {b:g})")
        orders.append(np.log(a / b) / np.log(ratio))
    if not orders:
        flags.append("order undefined")
    return StudyResult(errors, orders, flags)


def manufactured_case(params: ProblemParams, amp: float = 0.05):
    """Smooth manufactured profile near the linear steady state.

    ``w(s,t) = mf*s/S + amp*exp(-t)*sin(pi*s/S)`` keeps the transport wind
    small (diffusion-dominated regime) and meets the right boundary value
    exactly.  Returns (exact, source) with the source valid for the uncapped
    transport term, so use a cap parameter whose identity range covers the
    slopes.
    """
    mf, S = params.mass_fraction, params.S
    n, mu = params.n, params.mu
    a = amp * mf

    def exact(s, t):
        return mf * s / S + a * np.exp(-t) * np.sin(np.pi * s / S)

    def source(s, t):
        e = a * np.exp(-t)
        sin = np.sin(np.pi * s / S)
        cos = np.cos(np.pi * s / S)
        w = mf * s / S + e * sin
        ws = mf / S + e * np.pi / S * cos
        wss = -e * (np.pi / S) ** 2 * sin
        wt = -e * sin
        return wt - (n**2 * s ** (2.0 - 2.0 / n) * wss + n * w * ws - mu * s * ws)

    return exact, source


def spatial_order_study(params: ProblemParams, Ms: Sequence[int],
                        t_end: float = 0.02, amp: float = 0.05,
                        s_min: float = 1e-3) -> StudyResult:
    """Observed spatial order of the main solver on the manufactured case."""
    from . import solver
    from .grid import build_grid

    exact, source = manufactured_case(params, amp)
    reg = RegularizationParams(eps=0.2)  # identity range covers the slopes
    errors = []
    for M in Ms:
        g = build_grid(M, params.S, s_min, "uniform")
        w0 = exact(g.nodes, 0.0)
        fld = WField(g, w0, 0.0, FREE)
        traj = _run_with_source(params, reg, g, fld, t_end, source)
        err = np.max(np.abs(traj.final.w - exact(g.nodes, t_end)))
        errors.append(err)
    return observed_orders(errors)


def temporal_order_study(params: ProblemParams, dts: Sequence[float],
                         M: int = 257, t_end: float = 0.1,
                         amp: float = 0.2, s_min: float = 1e-3) -> StudyResult:
    """Observed temporal order at fixed spatial resolution."""
    from .grid import build_grid

    exact, source = manufactured_case(params, amp)
    reg = RegularizationParams(eps=0.2)
    g = build_grid(M, params.S, s_min, "uniform")
    ref_w = None
    sols = []
    for dt in dts:
        fld = WField(g, exact(g.nodes, 0.0), 0.0, FREE)
        traj = _run_with_source(params, reg, g, fld, t_end, source, dt_max=dt)
        sols.append(traj.final.w.copy())
    # compare against the finest-step run so the spatial error cancels
    errors = [float(np.max(np.abs(sw - sols[-1]))) for sw in sols[:-1]]
    return observed_orders(errors, ratio=dts[0] / dts[1])


def _run_with_source(params, reg, grid, fld, t_end, source, dt_max=None):
    """Main-solver run with an injected source (goes through the numpy kernel)."""
    from . import solver
    from .solver import _cap_params, _operator_arrays
    from . import kernels

    s, hl, hr, dcoef, cl, cc, cr, extrap = _operator_arrays(grid, reg, params)
    cap_a, cap_lam = _cap_params(reg)
    w = fld.w.copy()
    mode = 0 if fld.left_mode == DIRICHLET_ZERO else 1
    if dt_max is None:
        dt_max = t_end / 256.0
    traj = Trajectory(params, reg, grid, fld.left_mode)
    t, steps, clipped, lo, hi, status = kernels.advance(
        w, s, hl, hr, dcoef, cl, cc, cr,
        float(params.n), params.mu, params.mass_fraction,
        cap_a, cap_lam, mode, 0.0, t_end, 0.8, dt_max, 0.0, extrap,
        source_fn=source)
    if status != kernels.STATUS_OK:
        raise RuntimeError("source run failed")
    traj.snapshot(t_end, w, {k: 0 for k in traj.diag})
    return traj
