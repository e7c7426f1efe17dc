import numpy as np
import pytest

from engine.geom2d import square
from engine.laguerre import DiscreteMeasure


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run long acceptance tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def unit_square():
    return square(0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid_measure():
    """k x k cell centres of the unit square with equal masses (a centroidal configuration)."""

    def build(k: int) -> DiscreteMeasure:
        centres = (np.arange(k) + 0.5) / k
        xx, yy = np.meshgrid(centres, centres, indexing="ij")
        seeds = np.column_stack([xx.ravel(), yy.ravel()])
        return DiscreteMeasure(seeds, np.full(k * k, 1.0 / (k * k)))

    return build
