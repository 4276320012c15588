import math

import numpy as np
import pytest

from kscollapse.params import (DomainError, ProblemParams, derive_mu,
                               sphere_area, unit_ball_volume)


def test_sphere_area_low_dims():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_mu_n3_unit_ball():
    # m = 4*pi with omega_3 = 4*pi gives mean density 3
    assert derive_mu(3, 1.0, 4 * math.pi) == pytest.approx(3.0)


def test_mu_mass_fraction_one_third():
    m = sphere_area(3) / 3.0
    assert derive_mu(3, 1.0, m) == pytest.approx(1.0)


def test_mu_n4():
    m = 32.0 * sphere_area(4) / 4.0
    assert derive_mu(4, 2.0, m) == pytest.approx(2.0)


@pytest.mark.parametrize("bad", [dict(R=-1.0, m=1.0), dict(R=1.0, m=0.0),
                                 dict(R=0.0, m=1.0)])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        derive_mu(3, bad["R"], bad["m"])


def test_params_consistency():
    p = ProblemParams(3, 2.0, 5.0)
    assert p.mu == pytest.approx(p.m * p.n / (p.omega_n * p.R**p.n))
    assert p.S == 8.0
    assert p.mass_fraction == pytest.approx(5.0 / sphere_area(3))
    # mu is recomputed, never stored
    assert p.mu == derive_mu(p.n, p.R, p.m)


def test_unit_ball_volume_matches_omega():
    for n in range(1, 9):
        assert sphere_area(n) == pytest.approx(n * unit_ball_volume(n))
