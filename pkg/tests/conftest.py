import sys

import numpy as np
import pytest

from mrlattice import MultipleRank1Lattice, Rank1Lattice

FIVE_FIRST = (0, 6251, 10879, 15457, 19499)


def naive_dft(v):
    v = np.asarray(v, dtype=complex)
    M = len(v)
    j = np.arange(M)
    return np.exp(-2j * np.pi * np.outer(j, j) / M) @ v


def dense_oracle(freqs, mr1l):
    """Block Fourier matrix from floating-point node coordinates."""
    freqs = np.asarray(freqs, dtype=float)
    rows = []
    for i, lat in enumerate(mr1l):
        for j in range(0 if i == 0 else 1, lat.M):
            x = np.array([(j * zc) % lat.M for zc in lat.z], dtype=float) / lat.M
            rows.append(np.exp(2j * np.pi * freqs @ x))
    return np.array(rows)


def pairwise_alias_free(freqs, z, M):
    freqs = [tuple(int(v) for v in row) for row in freqs]
    res = [sum(a * b for a, b in zip(k, z)) % M for k in freqs]
    return [i for i in range(len(freqs)) if all(res[i] != res[h] for h in range(len(freqs)) if h != i)]


def random_coeffs(rng, shape):
    return rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)


def scheme(*pairs):
    return MultipleRank1Lattice(tuple(Rank1Lattice(z, M) for z, M in pairs))


@pytest.fixture
def five_set():
    return np.array([[k, 3] for k in FIVE_FIRST], dtype=np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
