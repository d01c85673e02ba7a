import warnings

import pytest

from amlab import build_graph, load_spec


@pytest.fixture(scope="session")
def flat32():
    return build_graph(load_spec("flat"), 32, 0.1, 2.0)


@pytest.fixture(scope="session")
def pend32():
    return build_graph(load_spec("pendulum(1)"), 32, 0.1, 1.6)


@pytest.fixture(scope="session")
def pend16():
    return build_graph(load_spec("pendulum(1)"), 16, 0.1, 1.0)


@pytest.fixture(autouse=True)
def _quiet_saturation():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=UserWarning)
        yield
