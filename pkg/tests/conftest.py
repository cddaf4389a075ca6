import sys
from pathlib import Path

import numpy as np
import pytest

from gpgm.ensemble import Ensemble

FIXTURES = Path(__file__).parent / "fixtures"

KET0 = np.array([1.0, 0.0], dtype=complex)
KETPLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)


def proj(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def random_psd(d, rng, rank=None):
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    return g @ g.conj().T


def random_hermitian(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (g + g.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def zero_plus():
    """Uniform {|0>, |+>} on the points 0 and 1."""
    return Ensemble([[0.0], [1.0]], [0.5, 0.5], [proj(KET0), proj(KETPLUS)])


@pytest.fixture
def orthogonal():
    return Ensemble([[0.0], [1.0]], [0.5, 0.5], [proj([1, 0]), proj([0, 1])])


@pytest.fixture
def identical():
    """Two points carrying the same mixed state."""
    sigma = np.array([[0.7, 0.2], [0.2, 0.3]], dtype=complex)
    return Ensemble([[0.0], [1.0]], [0.5, 0.5], [sigma, sigma])


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
