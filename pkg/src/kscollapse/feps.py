"""Smooth slope-cap nonlinearity.

``f_eps`` equals the identity below the cap ``1/eps`` and saturates above it,
staying below ``1/eps + 1`` with a nonnegative derivative everywhere.  The
corner at the cap is rounded by a C^2 rational ramp of width
``min(0.05/eps, 1)``:

    f(x) = x                               for x <= a := 1/eps
    f(x) = a + lam * u / sqrt(1 + u*u)     for x  > a,  u = (x - a)/lam

The ramp has unit slope and zero curvature at ``u = 0``, so ``f`` is C^2; its
supremum is ``a + lam <= 1/eps + 1``.  The family is pointwise nondecreasing
as ``eps`` decreases (both ``a`` and ``lam`` grow, and the ramp value is
monotone in each), which is what orders the capped solutions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def corner_width(eps: float) -> float:
    return min(0.05 / eps, 1.0)


@dataclass(frozen=True)
class SlopeCap:
    """Evaluator for ``f_eps`` and its first two derivatives."""

    eps: float

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError(f"slope-cap parameter must be positive, got {self.eps}")

    @property
    def cap(self) -> float:
        return 1.0 / self.eps

    @property
    def width(self) -> float:
        return corner_width(self.eps)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        a, lam = self.cap, self.width
        u = np.maximum(xi - a, 0.0) / lam
        ramp = a + lam * u / np.sqrt(1.0 + u * u)
        return np.where(xi <= a, xi, ramp)

    def deriv(self, xi):
        xi = np.asarray(xi, dtype=float)
        a, lam = self.cap, self.width
        u = np.maximum(xi - a, 0.0) / lam
        return np.where(xi <= a, 1.0, (1.0 + u * u) ** -1.5)

    def deriv2(self, xi):
        xi = np.asarray(xi, dtype=float)
        a, lam = self.cap, self.width
        u = np.maximum(xi - a, 0.0) / lam
        return np.where(xi <= a, 0.0, -3.0 * u * (1.0 + u * u) ** -2.5 / lam)


def identity_cap():
    """The uncapped limit: f(x) = x.  Stand-in for eps -> 0."""

    class _Identity:
        eps = 0.0
        cap = np.inf
        width = 0.0

        def __call__(self, xi):
            return np.asarray(xi, dtype=float)

        def deriv(self, xi):
            return np.ones_like(np.asarray(xi, dtype=float))

        def deriv2(self, xi):
            return np.zeros_like(np.asarray(xi, dtype=float))

    return _Identity()
