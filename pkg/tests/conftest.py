import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from eoc.cipher import RegisterLayout, keygen

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def layout9():
    return RegisterLayout.from_counts(9, 2, 1)


@pytest.fixture(scope="session")
def key9(layout9):
    return keygen(layout9, seed=2024)


@pytest.fixture(scope="session")
def key9b(layout9):
    return keygen(layout9, seed=2025)
