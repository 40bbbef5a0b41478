"""Shared fixtures and hypothesis configuration for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from niolab.dynamics import LorenzSkewProduct
from niolab.noise import mother_kernel

settings.register_profile(
    "niolab",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("niolab")


@pytest.fixture(scope="session")
def default_map() -> LorenzSkewProduct:
    return LorenzSkewProduct()


@pytest.fixture(scope="session")
def degenerate_map() -> LorenzSkewProduct:
    """Constant-slope instance (a=2, s=1): log |T'| == log 2 at every point and
    the uniform density is an exact stationary density, so every estimator has
    a closed-form oracle."""
    return LorenzSkewProduct(a=2.0, s=1.0, r=7.5)


@pytest.fixture(scope="session")
def uniform_mother():
    return mother_kernel("uniform")


@pytest.fixture(scope="session")
def bump_mother():
    return mother_kernel("quadratic_bump")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260814)
