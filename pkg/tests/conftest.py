import numpy as np
import pytest

from mimodet import build_constellation


@pytest.fixture(scope="session")
def qpsk():
    return build_constellation(2)


@pytest.fixture(scope="session")
def qam16():
    return build_constellation(4)


@pytest.fixture(scope="session")
def qam64():
    return build_constellation(6)


def random_channel(rng, n_rx, n_layers):
    """IID CN(0,1) channel draw shared by many tests."""
    return (
        rng.standard_normal((n_rx, n_layers)) + 1j * rng.standard_normal((n_rx, n_layers))
    ) / np.sqrt(2)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
