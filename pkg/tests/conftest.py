import numpy as np
import pytest

from compbcp.models import CovariateModel, make_dataset, sample_rows


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo acceptance check, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def dirichlet_model():
    return CovariateModel.dirichlet(np.full(5, 2.0))


@pytest.fixture
def dirichlet_data(dirichlet_model):
    """n=60 Dirichlet rows with a response driven by log X_0."""
    X = sample_rows(dirichlet_model, 60, 11)
    rng = np.random.default_rng(12)
    y = 2.0 * np.log(X[:, 0]) + rng.standard_normal(60)
    return make_dataset(X, y, dirichlet_model)
