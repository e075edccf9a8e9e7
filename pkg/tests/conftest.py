import numpy as np
import pytest

from markov_urng.markov_core import binary_kernel, binary_model, build_model, iid_model

# two-state Y chain and the X-given-Y kernels used by the side-information fixtures
WY = binary_kernel(0.1, 0.2)
V_GIVEN_Y = np.array([[0.8, 0.3], [0.2, 0.7]])  # V[x, y]
V_GIVEN_XPREV = np.array([[0.9, 0.4], [0.1, 0.6]])  # V[x, x']


def joint_model(w4: np.ndarray, initial=None):
    """Model from W[x, y, x', y'] on a 2x2 alphabet."""
    size = w4.shape[0] * w4.shape[1]
    kernel = w4.reshape(size, size)
    init = np.full(size, 1.0 / size) if initial is None else initial
    return build_model(kernel, init, x_size=w4.shape[0], y_size=w4.shape[1])


@pytest.fixture
def worked_example():
    return binary_model(0.1, 0.2)


@pytest.fixture
def fair_coin():
    return iid_model([0.5, 0.5])


@pytest.fixture
def biased_coin():
    return iid_model([0.7, 0.3])


@pytest.fixture
def a2_model():
    """W(x, y | x', y') = W_Y(y | y') V(x | y): strongly non-hidden."""
    w4 = WY[None, :, None, :] * V_GIVEN_Y[:, :, None, None] * np.ones((2, 2, 2, 2))
    return joint_model(w4)


@pytest.fixture
def a1_model():
    """Y is marginally Markov but X depends on x' beyond a permutation."""
    w4 = WY[None, :, None, :] * V_GIVEN_XPREV[:, None, :, None]
    return joint_model(w4)


@pytest.fixture
def hidden_model():
    """Y emitted from the fresh X, so Y alone is not Markov."""
    emit = np.array([[0.8, 0.3], [0.2, 0.7]])  # Q[y, x]
    w4 = V_GIVEN_XPREV[:, None, :, None] * emit.T[:, :, None, None] * np.ones((2, 2, 2, 2))
    return joint_model(w4)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: exhaustive checks that take more than a few seconds")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
