import numpy as np
import pytest

from vemqp.vem import warm_up


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    # Keep one-time kernel loading out of any timed test.
    warm_up()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
