"""Initial-data families and the density <-> accumulated-mass transform.

Every admissible initial profile ``w0`` is nondecreasing, vanishes at 0 and
equals ``m/omega_n`` at ``S = R**n``.  Quadrature error in the accumulation
integral is absorbed by a single multiplicative renormalization so the right
boundary value is machine-exact; runs rely on that for conservation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .params import ProblemParams

PROBE_COUNT = 10_000


class MassMismatchError(ValueError):
    pass


class InfeasibleFamilyError(ValueError):
    pass


@dataclass
class InitialData:
    """Validated initial accumulated-mass profile.

    ``fn`` maps arrays of s-values in [0, S] to w0 values.  ``kind`` and
    ``meta`` record how the profile was built (used by configs and reports).
    """

    params: ProblemParams
    fn: Callable[[np.ndarray], np.ndarray]
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        probes = np.linspace(0.0, p.S, PROBE_COUNT)
        vals = self(probes)
        mf = p.mass_fraction
        if abs(vals[0]) > 1e-12 * mf:
            raise MassMismatchError(f"w0(0) = {vals[0]:g}, expected 0")
        if abs(vals[-1] - mf) > 1e-10 * mf:
            raise MassMismatchError(
                f"w0(S) = {vals[-1]:.17g}, expected {mf:.17g}"
            )
        drops = np.diff(vals)
        if drops.size and float(drops.min()) < -1e-9 * mf:
            raise MassMismatchError("w0 is not nondecreasing on the probe grid")

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.asarray(self.fn(s), dtype=float)


def _gauss_panels(a: float, b: float, panels: int):
    """Nodes/weights of composite 5-point Gauss-Legendre on equal panels."""
    gx, gw = np.polynomial.legendre.leggauss(5)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights, edges


def accumulate_initial(u0: Callable[[np.ndarray], np.ndarray],
                       params: ProblemParams,
                       panels: int = 4096) -> InitialData:
    """Accumulated profile ``w0(s) = int_0^{s^(1/n)} r^(n-1) u0(r) dr``.

    ``u0`` must be a continuous nonnegative radial density whose integral
    over the ball matches ``params.m`` up to 1e-6 relative; the profile is
    then renormalized multiplicatively so ``w0(S)`` is exact.
    """
    p = params
    Rr = p.R
    nodes, weights, edges = _gauss_panels(0.0, Rr, panels)
    fvals = np.asarray(u0(nodes), dtype=float) * nodes ** (p.n - 1)
    panel_ints = (weights * fvals).reshape(panels, 5).sum(axis=1)
    cum = np.concatenate([[0.0], np.cumsum(panel_ints)])
    total = cum[-1]
    if abs(p.omega_n * total - p.m) > 1e-6 * p.m:
        raise MassMismatchError(
            f"mass integral {p.omega_n * total:.12g} deviates from m={p.m:.12g}"
        )
    scale = p.mass_fraction / total
    interp = PchipInterpolator(edges, cum * scale, extrapolate=False)

    def w0(s):
        s = np.asarray(s, dtype=float)
        r = np.clip(s, 0.0, p.S) ** (1.0 / p.n)
        out = interp(np.clip(r, 0.0, Rr))
        return np.asarray(out, dtype=float)

    return InitialData(p, w0, "tabulated-u0")


def cap_initial(data: InitialData, eps: float) -> Callable[[np.ndarray], np.ndarray]:
    """Pointwise minimum with the ramp ``s/eps`` (capped initial profile).

    Returns a plain callable: the capped profile deliberately fails the
    endpoint normalization whenever the cap is active at ``S``.
    """
    p = data.params
    if not (0.0 < eps < p.eps_max):
        raise ValueError(
            f"cap parameter must lie in (0, {p.eps_max:g}), got {eps}"
        )

    def w0eps(s):
        s = np.asarray(s, dtype=float)
        return np.minimum(s / eps, data(s))

    return w0eps


def family_collapse_lower(c: float, gamma: float, delta: float,
                          params: ProblemParams,
                          lift_fraction: float = 0.25) -> InitialData:
    """Admissible profile dominating ``c*s^2/(s^(2-gamma) + delta)``.

    The family itself is increasing but generally misses the boundary value,
    so a C^1 monotone lift is added on the outer ``lift_fraction`` of the
    domain, vanishing to second order at its onset and closing the gap to
    ``m/omega_n`` exactly at ``S``.  The result dominates the family
    pointwise and stays within the mass cap.
    """
    p = params
    if not (0.0 < gamma < 1.0 - 2.0 / p.n):
        raise InfeasibleFamilyError(
            f"gamma must lie in (0, {1.0 - 2.0 / p.n:g}), got {gamma}"
        )
    if c <= 0.0 or delta <= 0.0:
        raise InfeasibleFamilyError("need c > 0 and delta > 0")
    S, mf = p.S, p.mass_fraction

    def fam(s):
        return c * s * s / (s ** (2.0 - gamma) + delta)

    end_val = float(fam(np.asarray(S)))
    if end_val > mf * (1.0 + 1e-12):
        raise InfeasibleFamilyError(
            f"family value {end_val:g} at the endpoint exceeds the mass cap {mf:g}"
        )
    gap = max(mf - end_val, 0.0)
    s_a = S * (1.0 - lift_fraction)

    def w0(s):
        s = np.asarray(s, dtype=float)
        u = np.clip((s - s_a) / (S - s_a), 0.0, 1.0)
        vals = fam(s) + gap * u * u
        # exact endpoint despite rounding in fam(S)
        return np.where(s >= S, mf, np.minimum(vals, mf))

    return InitialData(p, w0, "collapse-family",
                       {"c": c, "gamma": gamma, "delta": delta})


def linear_initial(params: ProblemParams) -> InitialData:
    """The straight profile ``w0(s) = (m/omega_n) * s / S``."""
    p = params

    def w0(s):
        return p.mass_fraction * np.asarray(s, dtype=float) / p.S

    return InitialData(p, w0, "linear")


def tabulated_w0(params: ProblemParams, s_values, w_values) -> InitialData:
    """Monotone interpolant through given (s, w0) samples."""
    s_values = np.asarray(s_values, dtype=float)
    w_values = np.asarray(w_values, dtype=float)
    p = params
    if s_values[0] > 0.0:
        s_values = np.concatenate([[0.0], s_values])
        w_values = np.concatenate([[0.0], w_values])
    interp = PchipInterpolator(s_values, w_values, extrapolate=False)

    def w0(s):
        return np.asarray(interp(np.clip(s, 0.0, p.S)), dtype=float)

    return InitialData(p, w0, "tabulated-w0")


def custom_initial(params: ProblemParams, fn: Callable, **meta) -> InitialData:
    """Wrap an arbitrary closure as validated initial data."""
    return InitialData(params, fn, "custom-closure", dict(meta))
