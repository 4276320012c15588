import numpy as np
import pytest

from kscollapse.params import ProblemParams, sphere_area


@pytest.fixture
def p_unit():
    """n=3, R=1, m=omega_3: mass fraction 1, mu = 3, the linear steady case."""
    return ProblemParams(3, 1.0, sphere_area(3))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
