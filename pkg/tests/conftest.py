"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from pi0lab.model import MixtureParams


@pytest.fixture
def rng():
    """Fixed RNG for reproducible tests."""
    return np.random.default_rng(42)


@pytest.fixture
def a1():
    """The first built-in benchmark model: theta=0.6, delta=0.3, s=3."""
    return MixtureParams(0.6, 0.3, 3.0)
