"""Numerical laboratory for radial chemotaxis mass collapse.

The package integrates the accumulated-mass form of the radial
parabolic-elliptic aggregation system on a graded mesh, removes the slope cap
to approximate the minimal measure-valued continuation, tracks the point mass
forming at the origin, and machine-verifies the closed-form comparison
profiles (sub/supersolutions) that force or bound the collapse.
"""

from .params import ProblemParams, derive_mu, sphere_area, unit_ball_volume
from .grid import Grid, WField, build_grid, differentiate, DIRICHLET_ZERO, FREE
from .initial import (InitialData, accumulate_initial, cap_initial,
                      family_collapse_lower, linear_initial, tabulated_w0,
                      custom_initial)
from .solver import (RegularizationParams, Trajectory, ThetaTrace, step, run,
                     regularization_limit, extract_theta, cfl_limit,
                     make_initial_field)

__version__ = "0.1.0"

__all__ = [
    "ProblemParams", "derive_mu", "sphere_area", "unit_ball_volume",
    "Grid", "WField", "build_grid", "differentiate", "DIRICHLET_ZERO", "FREE",
    "InitialData", "accumulate_initial", "cap_initial",
    "family_collapse_lower", "linear_initial", "tabulated_w0", "custom_initial",
    "RegularizationParams", "Trajectory", "ThetaTrace", "step", "run",
    "regularization_limit", "extract_theta", "cfl_limit", "make_initial_field",
    "__version__",
]
