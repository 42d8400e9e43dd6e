import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ldlab", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("ldlab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def within_se(est, target, se, k=3.0):
    """True when ``est`` lies within ``k`` standard errors of ``target``."""
    return abs(est - target) <= k * se
