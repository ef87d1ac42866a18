"""
Shared test fixtures and utilities.

Provides seeded generators, reference matrices and builtin oracles.
"""

import numpy as np
import pytest

from choi_ladder.config import settings
from choi_ladder.constructions import builtin_oracle, random_kraus_map
from choi_ladder.maps import KrausMap


@pytest.fixture
def rng():
    """Seeded generator so every test run sees the same samples."""
    return np.random.default_rng(20240607)


@pytest.fixture
def swap():
    """SWAP on C^2 (x) C^2, the Choi matrix of the transpose map."""
    return np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
        dtype=np.complex128,
    )


@pytest.fixture
def identity_choi():
    """Choi matrix of the identity channel on C^2."""
    return np.array(
        [[1, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 1]],
        dtype=np.complex128,
    )


@pytest.fixture
def random_hermitian(rng):
    """Factory for random Hermitian matrices."""

    def _make(d):
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        return (x + x.conj().T) / 2

    return _make


@pytest.fixture
def sample_kraus(rng):
    """Random three-operator Kraus map from C^3 to C^4."""
    return random_kraus_map(3, 4, 3, rng)


@pytest.fixture
def sample_channel(rng):
    """Random trace-preserving Kraus map on C^3."""
    return random_kraus_map(3, 3, 2, rng, normalize=True)


@pytest.fixture
def doubled_identity():
    """2 * identity on C^4 as a single Kraus operator sqrt(2) I."""
    return KrausMap.from_operators([np.sqrt(2) * np.eye(4)])


@pytest.fixture
def builtin():
    """Factory for builtin oracles at square dimensions."""

    def _make(name, dim=4, **params):
        return builtin_oracle(name, params, (dim, dim))

    return _make


@pytest.fixture
def lapack_solver(monkeypatch):
    """Switch every spectral routine to numpy.linalg.eigh."""
    monkeypatch.setattr(settings, "eigensolver", "lapack")
    return settings
