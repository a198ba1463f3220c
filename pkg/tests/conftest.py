import numpy as np
import pytest

from tests.helpers import make_ppg_partition, make_public_partition


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def public_partition():
    return make_public_partition()


@pytest.fixture
def ppg_partition():
    return make_ppg_partition()
