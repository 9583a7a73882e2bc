from __future__ import annotations

import numpy as np
import pytest

from sublinear.corpus import builtin, prop51_build, symmetric_grid
from sublinear.grid import interval_grid, radial_grid
from sublinear.spectrum import principal_eigenpair
from sublinear.weight import sample_weight

PI = np.pi


def assert_bounds(rep):
    """A converged report carries passing a-priori bound flags."""
    assert rep.converged
    b = rep.bounds_checked
    assert b.get("upper") is True, b
    if rep.classification.positive:
        assert b.get("lower") is True, b


def normalized(spec, g, target=1.0):
    """Weight ``c * spec`` on ``g`` with ``lambda_1 = target``."""
    lam = principal_eigenpair(sample_weight(spec, g)).lambda1
    return sample_weight(spec.scaled(lam / target), g)


@pytest.fixture(scope="session")
def g_pi():
    return interval_grid(0.0, PI, 1000)


@pytest.fixture(scope="session")
def g_unit():
    return interval_grid(0.0, 1.0, 1000)


@pytest.fixture(scope="session")
def g_ball3():
    return radial_grid(1.0, 3, 400)


@pytest.fixture(scope="session")
def sine_modes():
    return builtin("sine_modes", {"kappa": -0.2})


@pytest.fixture(scope="session")
def w_modes(g_pi, sine_modes):
    return sample_weight(sine_modes, g_pi)


@pytest.fixture(scope="session")
def w_manufactured(g_pi):
    return sample_weight(builtin("manufactured", {"q": 0.5}), g_pi)


@pytest.fixture(scope="session")
def dc():
    return prop51_build(1.0 / 3.0)


@pytest.fixture(scope="session")
def g_sym():
    return symmetric_grid(999)


@pytest.fixture(scope="session")
def w_dc(dc, g_sym):
    return sample_weight(dc.weight, g_sym)


@pytest.fixture(scope="session")
def w_dcbar(dc, g_sym):
    return sample_weight(dc.modified_weight, g_sym)
