import numpy as np
import pytest

SEED = 20240917


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)
