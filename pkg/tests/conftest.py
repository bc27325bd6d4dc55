import numpy as np
import pytest

from samplelab.models import make_model


@pytest.fixture
def oscillator():
    return make_model("oscillator")


@pytest.fixture
def morse():
    return make_model("morse")


@pytest.fixture
def lj():
    return make_model("lj")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
