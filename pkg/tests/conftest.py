"""Shared fixtures: seeded streams, the default quadrature rule and sigma_c at L_W = 1."""

import pytest

from analysis import stationary as st
from numerics import Quadrature, RngStream


@pytest.fixture
def stream():
    return RngStream(20240917)


@pytest.fixture(scope="session")
def quadrature():
    return Quadrature()


@pytest.fixture(scope="session")
def sigma_c():
    return st.critical_sigma(1.0)
