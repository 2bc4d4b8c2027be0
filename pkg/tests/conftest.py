"""Shared fixtures for rankmap tests."""

import numpy as np
import pytest

from rankmap.services.empirical import DataSet


@pytest.fixture
def rng():
    """Seeded generator so failures reproduce."""
    return np.random.default_rng(1234)


@pytest.fixture
def low_rank_pair(rng):
    """Signals of rank 3 in R^6 observed through a 5 x 6 operator with small noise."""
    basis = rng.standard_normal((6, 3))
    X = basis @ rng.standard_normal((3, 200))
    F = rng.standard_normal((5, 6))
    Y = F @ X + 0.01 * rng.standard_normal((5, 200))
    return DataSet(X=X, Y=Y), F
