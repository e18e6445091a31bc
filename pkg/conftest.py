import numpy as np
import pytest

from matcore import EnsembleSpec, Gaussian, SymMatrix, Uniform


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale acceptance runs (deselect with -m "not slow")')


@pytest.fixture
def pair_matrix():
    """[[0, -1], [-1, 0]]: ground vector (1, 1)/sqrt(2) = -s exactly"""
    return SymMatrix.from_dense([[0.0, -1.0], [-1.0, 0.0]])


@pytest.fixture
def uniform_spec():
    return EnsembleSpec(dim=60, distribution=Uniform(), seed=11)


@pytest.fixture
def gaussian_spec():
    return EnsembleSpec(dim=60, distribution=Gaussian(), seed=12)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
