import numpy as np
import pytest

from sptrsv import CscMatrix, SyntheticKind, SyntheticSpec, generate_synthetic, random_lower


@pytest.fixture
def worked_3x3():
    """L = [[2,0,0],[1,1,0],[0,3,4]] with b=[2,2,7]; hand solution x=[1,1,1]."""
    l = CscMatrix.from_entries(
        3, {(0, 0): 2.0, (1, 0): 1.0, (1, 1): 1.0, (2, 1): 3.0, (2, 2): 4.0}
    )
    return l, np.array([2.0, 2.0, 7.0]), np.array([1.0, 1.0, 1.0])


@pytest.fixture
def identity4():
    return generate_synthetic(SyntheticSpec(SyntheticKind.DIAGONAL, 4))


def bidiagonal(n: int) -> CscMatrix:
    return generate_synthetic(SyntheticSpec(SyntheticKind.BIDIAGONAL, n))


def random_instance(seed: int, n_lo=16, n_hi=512, d_lo=0.001, d_hi=0.3):
    """Log-uniform random size and density, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    n = int(np.exp(rng.uniform(np.log(n_lo), np.log(n_hi))))
    density = float(np.exp(rng.uniform(np.log(d_lo), np.log(d_hi))))
    return random_lower(n, density, seed), rng


def random_rhs(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng((seed, 77)).uniform(-2.0, 2.0, size=n)
