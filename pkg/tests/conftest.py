import numpy as np
import pytest

from uiobank.linmath import Tolerances, is_detectable, is_stabilizable
from uiobank.plant import LtiSystem
from uiobank.scenario import EXAMPLE1, EXAMPLE2, EXAMPLE5
from uiobank.uio import max_q


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture
def ex1():
    return LtiSystem(**EXAMPLE1)


@pytest.fixture
def ex2():
    return LtiSystem(**EXAMPLE2)


@pytest.fixture
def ex5():
    return LtiSystem(**EXAMPLE5)


def random_bank_system(rng, n_range=(3, 4), p=3, rho_max=0.95):
    """Random (A, B, C) with p inputs whose q=1 bank is fully feasible."""
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        n_y = int(rng.integers(2, n + 1))
        A = rng.standard_normal((n, n))
        A *= rng.uniform(0.3, rho_max) / max(np.abs(np.linalg.eigvals(A)))
        B = rng.standard_normal((n, p))
        C = rng.standard_normal((n_y, n))
        sys = LtiSystem(A, B, C)
        if np.linalg.matrix_rank(B) < p or not is_detectable(A, C) or not is_stabilizable(A, B):
            continue
        if max_q(sys) >= 1:
            return sys


def full_measurement_system(rng, n, p):
    """C = I makes every column subset admit a partial UIO."""
    A = rng.standard_normal((n, n))
    A *= 0.8 / max(np.abs(np.linalg.eigvals(A)))
    return LtiSystem(A, rng.standard_normal((n, p)), np.eye(n))
