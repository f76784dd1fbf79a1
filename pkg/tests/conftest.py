import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from quadineq import transforms as T

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def builtins_s0():
    return [t for t in T.builtin_transforms() if T.CLASS_S0 <= t.claims]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
