import numpy as np
import pytest

from vton.fixtures import make_scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def scene():
    """One deterministic 96x64 person/garment pair shared across tests."""
    return make_scene(seed=42, height=96, width=64)


@pytest.fixture(scope="session")
def small_scene():
    return make_scene(seed=7, height=64, width=48)
