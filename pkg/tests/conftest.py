import numpy as np
import pytest

from evtore import SensorGeometry, ToreConfig
from evtore.verify import random_stream


@pytest.fixture
def geom4() -> SensorGeometry:
    return SensorGeometry(4, 4)


@pytest.fixture
def geom16() -> SensorGeometry:
    return SensorGeometry(16, 16)


@pytest.fixture
def k4() -> ToreConfig:
    return ToreConfig(k=4)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_stream(rng, geom16):
    return random_stream(rng, geom16, 2000)
