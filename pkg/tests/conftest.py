import numpy as np
import pytest

from fasaris import SystemConfig, derive_params, partition_for


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def default_cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def default_params(default_cfg):
    return derive_params(default_cfg)


@pytest.fixture(scope="session")
def default_partition(default_cfg):
    return partition_for(default_cfg)
