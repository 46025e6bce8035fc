import numpy as np
import pytest

from ccnet import ModelParams


@pytest.fixture
def critical():
    return ModelParams.critical()


@pytest.fixture
def lopsided():
    return ModelParams(0.6, 0.8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
