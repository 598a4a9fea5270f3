import pytest

from curvedblowup.metric import WarpedMetric
from curvedblowup.renorm.rounds import run_rounds
from curvedblowup.spectral import negative_eigenvalue


@pytest.fixture(scope="session")
def flat_rounds():
    return run_rounds(0.75, WarpedMetric.flat(), k_max=1)


@pytest.fixture(scope="session")
def sphere_rounds():
    return run_rounds(0.75, WarpedMetric.sphere(), k_max=1)


@pytest.fixture(scope="session")
def ground_state():
    return negative_eigenvalue(n_scan=60)
