"""Shared fixtures: the three reference increment models used throughout.

Expected values marked "closed form" below are derived analytically:
  - simple +/-1 walk, p(up)=0.25: theta* = ln 3, tilted p(up)=0.75,
    drift after tilting +0.5, overshoot factor exp(-theta*) = 1/3.
  - Gaussian(-0.5, 1): theta* = -2 mu / sigma^2 = 1, tilted mean +0.5.
  - {-2: 0.4, +1: 0.6}: theta* = ln((1 + sqrt 7)/3), tilted drift 3/16.
"""

import math

import pytest

from reflectedwalk import model

LN3 = math.log(3.0)
THETA_SECOND = math.log((1.0 + math.sqrt(7.0)) / 3.0)


@pytest.fixture(scope="session")
def pm_simple():
    return model.DiscreteTable((-1.0, 1.0), (0.75, 0.25))


@pytest.fixture(scope="session")
def tm_simple(pm_simple):
    return model.solve_theta_star(pm_simple)


@pytest.fixture(scope="session")
def pm_gauss():
    return model.Gaussian(-0.5, 1.0)


@pytest.fixture(scope="session")
def tm_gauss(pm_gauss):
    return model.solve_theta_star(pm_gauss)


@pytest.fixture(scope="session")
def pm_second():
    return model.DiscreteTable((-2.0, 1.0), (0.4, 0.6))


@pytest.fixture(scope="session")
def tm_second(pm_second):
    return model.solve_theta_star(pm_second)
