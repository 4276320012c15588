import numpy as np
import pytest

from kscollapse.grid import DIRICHLET_ZERO, FREE, WField, build_grid, differentiate
from kscollapse.initial import family_collapse_lower, linear_initial
from kscollapse.params import ProblemParams, sphere_area
from kscollapse.solver import (CFLError, NonConvergenceError,
                               RegularizationParams, cfl_limit, extract_theta,
                               make_initial_field, regularization_limit, run,
                               step)


@pytest.fixture
def steady_setup(p_unit):
    g = build_grid(257, p_unit.S, 1e-12, "geometric")
    reg = RegularizationParams(eps=0.5)
    return p_unit, g, reg


def steady_target(g):
    t = g.nodes.copy()
    t[0] = 0.0
    return t


def test_step_steady_linear(steady_setup):
    p, g, reg = steady_setup
    f0 = make_initial_field(linear_initial(p), g, reg, DIRICHLET_ZERO)
    f1, info = step(f0, 1e-4, reg, p)
    assert np.max(np.abs(f1.w - f0.w)) < 1e-12
    assert info["clipped"] == 0.0


def test_step_constant_free_mode(p_unit):
    p = p_unit
    g = build_grid(128, p.S, 1e-3, "geometric")
    reg = RegularizationParams(eps=0.5)
    f0 = WField(g, np.full(g.M, p.mass_fraction), 0.0, FREE)
    dt = 0.9 * cfl_limit(f0, reg, p)
    f1, _ = step(f0, dt, reg, p)
    assert np.max(np.abs(f1.w - f0.w)) == 0.0


def test_step_matches_explicit_euler_for_small_dt(p_unit):
    # semi-implicit and forward-Euler agree to O(dt^2) on one tiny step
    p = p_unit
    g = build_grid(101, p.S, 1e-3, "geometric")
    reg = RegularizationParams(eps=0.1)
    w0 = np.clip(g.nodes**2, 0.0, p.mass_fraction)
    w0[0] = 0.0
    w0[-1] = p.mass_fraction
    f0 = WField(g, w0, 0.0, DIRICHLET_ZERO)
    dt = 1e-6
    f1, _ = step(f0, dt, reg, p)

    from kscollapse.oracle import explicit_rhs

    rhs = explicit_rhs(f0, reg, p)
    euler = w0.copy()
    euler[1:-1] += dt * rhs[1:-1]
    assert np.max(np.abs(f1.w - euler)) < 1e-9


def test_step_cfl_violation(p_unit):
    p = p_unit
    g = build_grid(64, p.S, 1e-4, "geometric")
    reg = RegularizationParams(eps=0.1)
    f0 = make_initial_field(family_collapse_lower(0.8, 0.2, 1e-2, p), g, reg)
    limit = cfl_limit(f0, reg, p)
    with pytest.raises(CFLError):
        step(f0, 2.0 * limit, reg, p)


def test_run_t_end_zero(steady_setup):
    p, g, reg = steady_setup
    traj = run(p, reg, g, linear_initial(p), t_end=0.0)
    assert len(traj.times) == 1 and traj.times[0] == 0.0


def test_run_steady_preserved(steady_setup):
    p, g, reg = steady_setup
    traj = run(p, reg, g, linear_initial(p), t_end=1.0, n_outputs=4, dt_max=1e-3)
    assert np.max(np.abs(traj.final.w - steady_target(g))) < 1e-9
    assert traj.diag["mass_defect"][-1] == 0.0


def test_run_onset_slope_growth(p_unit):
    # capped collapse run: the maximal slope grows during onset
    p = p_unit
    g = build_grid(192, p.S, 1e-6, "geometric")
    reg = RegularizationParams(eps=1e-2)
    init = family_collapse_lower(0.9, 0.3, 1e-4, p)
    traj = run(p, reg, g, init, t_end=0.02, n_outputs=4)
    smax = []
    for f in traj.fields:
        ws, _ = differentiate(f)
        smax.append(float(np.max(ws)))
    assert smax[-1] > smax[0]
    assert all(b >= a * (1 - 1e-6) for a, b in zip(smax, smax[1:]))


def test_run_bounds_and_monotonicity(p_unit):
    p = p_unit
    g = build_grid(160, p.S, 1e-6, "geometric")
    reg = RegularizationParams(eps=1e-2)
    init = family_collapse_lower(0.8, 0.25, 1e-3, p)
    traj = run(p, reg, g, init, t_end=0.1, n_outputs=5)
    for f, clip in zip(traj.fields, traj.diag["clipped_mass"]):
        assert f.check_bounds(p.mass_fraction, tol=0) <= 1e-9 * p.mass_fraction
    assert traj.diag["clipped_mass"][-1] < 1e-6 * p.m
    assert min(traj.diag["min_slope"]) >= -1e-6 * p.mass_fraction / p.S


def test_extract_theta_linear_offset(p_unit):
    g = build_grid(64, 1.0, 0.01, "uniform")
    w = 0.3 + 0.5 * g.nodes
    f = WField(g, np.clip(w, 0, 1), 0.0, FREE)
    fit = extract_theta(f, p_unit)
    assert fit.theta_w == pytest.approx(0.3, abs=1e-10)
    assert fit.theta == pytest.approx(p_unit.omega_n * 0.3, rel=1e-9)


def test_extract_theta_zero_for_linear(p_unit):
    g = build_grid(64, 1.0, 0.01, "uniform")
    f = WField(g, g.nodes.copy(), 0.0, FREE)
    fit = extract_theta(f, p_unit)
    assert fit.theta == pytest.approx(0.0, abs=1e-12)


def test_extract_theta_power_profile(p_unit):
    g = build_grid(400, 1.0, 1e-4, "geometric")
    w = np.clip(0.2 + g.nodes**0.4, 0.0, 1.0)
    f = WField(g, w, 0.0, FREE)
    fit = extract_theta(f, p_unit)
    assert fit.theta_w == pytest.approx(0.2, abs=1e-3)
    assert fit.p == pytest.approx(0.4, abs=0.051)


def test_extract_theta_layer_skipped(p_unit):
    # boundary-layer profile: w jumps from 0 to 0.5 across a thin layer,
    # then grows slowly; the fit must recover the post-layer level
    g = build_grid(512, 1.0, 1e-7, "geometric")
    s = g.nodes
    layer = 0.5 * np.minimum(s / 1e-4, 1.0)
    w = np.clip(layer + 0.3 * s, 0.0, 1.0)
    w[0] = 0.0
    f = WField(g, w, 0.0, DIRICHLET_ZERO)
    fit = extract_theta(f, p_unit)
    assert fit.theta_w == pytest.approx(0.5, abs=5e-3)


def test_regularization_limit_steady(p_unit):
    p = p_unit
    grids = [build_grid(96, p.S, 1e-10, "geometric") for _ in range(3)]
    regs = [RegularizationParams(eps=e) for e in (1e-1, 1e-2, 1e-3)]
    res = regularization_limit(p, regs, grids, linear_initial(p), t_end=0.2,
                               n_outputs=4)
    assert res.monotonicity_defect <= 1e-6 * p.mass_fraction
    assert np.all(res.theta.theta <= 1e-6 * p.m)


def test_regularization_limit_identical_eps(p_unit):
    p = p_unit
    g = build_grid(64, p.S, 1e-8, "geometric")
    regs = [RegularizationParams(eps=1e-2)] * 2
    res = regularization_limit(p, regs, [g, g], linear_initial(p), t_end=0.05,
                               n_outputs=2)
    assert res.monotonicity_defect == 0.0


def test_nonconvergence_error(p_unit):
    p = p_unit
    g = build_grid(64, p.S, 1e-6, "geometric")
    reg = RegularizationParams(eps=1e-3)
    init = family_collapse_lower(0.9, 0.3, 1e-4, p)
    with pytest.raises(NonConvergenceError):
        # absurd floor: force immediate underflow by shrinking dt_max
        run(p, reg, g, init, t_end=1.0, n_outputs=1, dt_max=1e-16)
