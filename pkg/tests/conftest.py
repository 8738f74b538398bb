import numpy as np
import pytest

from crgd.objective import (
    MatFacParams,
    ThreeFoldParams,
    default_spectrum,
    matfac_problem,
    threefold_problem,
)


@pytest.fixture(scope="session")
def threefold():
    return threefold_problem(ThreeFoldParams(eta=0.7))


@pytest.fixture(scope="session")
def matfac6():
    """Small matrix factorization instance for fast derivative checks."""
    return matfac_problem(MatFacParams(6, default_spectrum(6, 0.1), np.eye(6)))


@pytest.fixture(scope="session")
def matfac50():
    return matfac_problem(MatFacParams(50, default_spectrum(50, 0.01), np.eye(50)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
