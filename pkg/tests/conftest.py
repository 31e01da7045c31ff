import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from kerdisc.core.schemas import RngState, SampleBatch
from kerdisc.priors.sampling import sample
from kerdisc.priors.schemas import GaussianPrior


@pytest.fixture(scope="module")
def rng():
    return RngState(seed=20240611)


@pytest.fixture(scope="module")
def gaussian_batch(rng):
    """n=128 draws from N(0, I_4)."""
    return sample(GaussianPrior(d=4), 128, rng.child(0))


@pytest.fixture(scope="module")
def shifted_batch(rng):
    """n=128 draws from N(1, I_4), far from the standard normal prior."""
    return SampleBatch(data=1.0 + rng.child(1).generator().standard_normal((128, 4)))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long flow runs; deselect with -m 'not slow'")
