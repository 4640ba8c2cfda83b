import numpy as np
import pytest

from fracprox.bench import make_instance
from fracprox.model import new_problem


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the slow suite")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running reproduction runs (enable with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_problem():
    """A 4x8 Gaussian instance with a 2-sparse ground truth."""
    return make_instance(4, 8, 2, 1.0, 3)


@pytest.fixture
def padded_identity():
    return new_problem([[1, 0, 0, 0], [0, 1, 0, 0]], [1, 0])
