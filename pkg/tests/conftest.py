import numpy as np
import pytest

from tomokit.config import GridConfig
from tomokit.core.measurement import husimi_operators, number_operators
from tomokit.core.quantum import make_density_matrix


def random_lower(rng, dim):
    """A random complex lower-triangular matrix with a positive real diagonal."""
    t = np.tril(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    idx = np.arange(dim)
    t[idx, idx] = np.abs(t[idx, idx]) + 0.1
    return t


def assert_valid_dm(rho, tol=1e-10):
    m = rho.matrix
    assert np.max(np.abs(m - m.conj().T)) <= tol
    assert np.linalg.eigvalsh(m)[0] >= -tol
    assert abs(np.real(np.trace(m)) - 1.0) <= tol
    make_density_matrix(m, tol)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid20():
    return GridConfig()


@pytest.fixture(scope="session")
def husimi32():
    grid = GridConfig()
    return husimi_operators(32, grid.xgrid(), grid.pgrid())


@pytest.fixture(scope="session")
def husimi8_small():
    axis = np.linspace(-3.0, 3.0, 6)
    return husimi_operators(8, axis, axis)


@pytest.fixture
def number4():
    return number_operators(4)
