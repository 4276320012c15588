import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kscollapse.feps import SlopeCap, identity_cap


def test_identity_below_cap():
    f = SlopeCap(0.5)
    xi = np.linspace(0.0, 2.0, 101)  # cap at 2
    assert f(xi) == pytest.approx(xi)
    assert np.all(f.deriv(xi) == 1.0)


def test_bounded_above():
    for eps in (1.0, 0.1, 1e-3, 1e-5):
        f = SlopeCap(eps)
        xi = np.linspace(0.0, 100.0 / eps, 20001)
        assert np.all(f(xi) <= 1.0 / eps + 1.0)
        assert np.all(f.deriv(xi) >= 0.0)
        assert np.all(f.deriv(xi) <= 1.0)


def test_c2_junction():
    f = SlopeCap(0.25)
    a = f.cap
    h = 1e-7
    for g, lim in ((f, a + 0), ):
        pass
    # value, slope and curvature continuous across the corner
    assert float(f(a + 1e-12) - f(a - 1e-12)) < 1e-11
    d_left = (f(a) - f(a - h)) / h
    d_right = (f(a + h) - f(a)) / h
    assert float(abs(d_left - d_right)) < 1e-5
    assert abs(float(f.deriv2(a - 1e-12)) - 0.0) == 0.0
    assert abs(float(f.deriv2(a + 1e-9))) < 1e-6


def test_never_exceeds_identity():
    f = SlopeCap(0.05)
    xi = np.linspace(0, 200, 5001)
    assert np.all(f(xi) <= xi + 1e-12)


@settings(max_examples=40, deadline=None)
@given(eps1=st.floats(1e-4, 0.9), factor=st.floats(0.05, 0.95),
       xi=st.floats(0.0, 1e6))
def test_pointwise_monotone_in_cap(eps1, factor, xi):
    # removing more of the cap (smaller eps) can only increase f
    f1 = SlopeCap(eps1)
    f2 = SlopeCap(eps1 * factor)
    assert float(f2(xi)) >= float(f1(xi)) - 1e-12


def test_identity_cap():
    f = identity_cap()
    xi = np.linspace(0, 10, 11)
    assert f(xi) == pytest.approx(xi)
    assert np.all(f.deriv(xi) == 1.0)
    assert np.all(f.deriv2(xi) == 0.0)


def test_deriv2_matches_fd():
    f = SlopeCap(0.2)
    xi = np.array([5.3, 6.1, 7.9])
    h = 1e-3  # larger step: the curvature is tiny against f itself
    fd = (f(xi + h) - 2 * f(xi) + f(xi - h)) / h**2
    assert f.deriv2(xi) == pytest.approx(fd, rel=1e-3, abs=1e-8)
