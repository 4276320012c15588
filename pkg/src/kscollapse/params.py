"""Problem parameters for the radial aggregation model.

The model lives on a ball of radius ``R`` in ``n`` dimensions and carries a
total mass ``m``.  Everything downstream works with the accumulated-mass
variable on the interval ``(0, S]`` with ``S = R**n``; the mean density
``mu = m*n/(omega_n * R**n)`` and the boundary value ``m/omega_n`` are the
two derived constants used throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Raised for physically inadmissible parameters."""


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in ``n`` dimensions (Gamma-function form)."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_area(n: int) -> float:
    """Surface area ``omega_n = n*|B_1(0)|`` of the unit sphere in ``n`` dims."""
    return n * unit_ball_volume(n)


def derive_mu(n: int, R: float, m: float) -> float:
    """Mean density ``mu = m*n/(omega_n * R**n)``.

    Raises
    ------
    DomainError
        If ``R`` or ``m`` is nonpositive or ``n < 1``.
    """
    if not (isinstance(n, int) and n >= 1):
        raise DomainError(f"dimension must be an integer >= 1, got {n!r}")
    if R <= 0.0:
        raise DomainError(f"radius must be positive, got {R}")
    if m <= 0.0:
        raise DomainError(f"mass must be positive, got {m}")
    return m * n / (sphere_area(n) * R**n)


@dataclass(frozen=True)
class ProblemParams:
    """Physical configuration record.

    ``mu``, ``omega_n`` and ``S`` are always recomputed from ``(n, R, m)``;
    they are exposed as properties so the record cannot drift out of
    consistency.
    """

    n: int
    R: float
    m: float

    def __post_init__(self):
        derive_mu(self.n, self.R, self.m)  # validates

    @property
    def omega_n(self) -> float:
        return sphere_area(self.n)

    @property
    def mu(self) -> float:
        return derive_mu(self.n, self.R, self.m)

    @property
    def S(self) -> float:
        """Domain endpoint in the accumulated variable, ``S = R**n``."""
        return self.R**self.n

    @property
    def mass_fraction(self) -> float:
        """Right boundary value ``m / omega_n``."""
        return self.m / self.omega_n

    @property
    def eps_max(self) -> float:
        """Upper limit of the admissible slope-cap range, ``S*omega_n/m``."""
        return self.S * self.omega_n / self.m
