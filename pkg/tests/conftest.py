import numpy as np
import pytest

from dispflow.grid import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[64, 128])
def grid(request):
    return make_grid(request.param)
