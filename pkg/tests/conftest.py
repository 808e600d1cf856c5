import numpy as np
import pytest
from hypothesis import settings

from castor import CastorConfig, make_synthetic

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_data():
    return make_synthetic(classes=2, n=30, m=48, seed=3)


@pytest.fixture(scope="session")
def small_config():
    return CastorConfig(n_groups=8, n_shapelets=4, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
