import random

import pytest
from hypothesis import HealthCheck, settings

from ibpm.fixtures import figure4

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def fig4():
    return figure4()


@pytest.fixture
def rng():
    return random.Random(1234)
