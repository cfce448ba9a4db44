"""Shared fixtures: reference parameter sets and random draws."""

import numpy as np
import pytest

from gpl import MaterialParams, PronyKernel

# Reference sets.  SET_A is exponentially stable (gamma_g = 1, chi_g = 0);
# SET_B flips J so chi_g = 1; SET_C kills gamma_g; SET_D is doubly
# degenerate (gamma_g = 0 and equal wave speeds).
SET_A = MaterialParams(rho=1.0, J=2.0, c=2.0, mu=1.0, b=1.0, alpha=1.0, xi=2.0, beta=1.0)
SET_B = MaterialParams(rho=1.0, J=1.0, c=2.0, mu=1.0, b=1.0, alpha=1.0, xi=2.0, beta=1.0)
SET_C = MaterialParams(rho=1.0, J=2.0, c=1.0, mu=1.0, b=1.0, alpha=1.0, xi=2.0, beta=1.0)
SET_D = MaterialParams(rho=1.0, J=1.0, c=1.0, mu=1.0, b=1.0, alpha=1.0, xi=2.0, beta=1.0)

UNIT_KERNEL = PronyKernel(((1.0, 1.0),))


@pytest.fixture
def set_a():
    return SET_A


@pytest.fixture
def set_b():
    return SET_B


@pytest.fixture
def set_c():
    return SET_C


@pytest.fixture
def set_d():
    return SET_D


@pytest.fixture
def unit_kernel():
    return UNIT_KERNEL


def random_params(rng: np.random.Generator) -> MaterialParams:
    """A valid random draw: positive constants, mu*xi > b^2, couplings nonzero."""
    while True:
        rho, J, c, mu, alpha, xi = np.exp(rng.uniform(-1.0, 1.0, 6))
        b = rng.uniform(-1.0, 1.0) * np.sqrt(mu * xi) * 0.9
        beta = rng.uniform(-2.0, 2.0)
        if abs(b) < 1e-3 or abs(beta) < 1e-2:
            continue
        return MaterialParams(
            rho=float(rho), J=float(J), c=float(c), mu=float(mu),
            b=float(b), alpha=float(alpha), xi=float(xi), beta=float(beta),
        )


def random_kernel(rng: np.random.Generator, max_terms: int = 3) -> PronyKernel:
    m = int(rng.integers(1, max_terms + 1))
    terms = tuple(
        (float(np.exp(rng.uniform(-1.0, 1.0))), float(np.exp(rng.uniform(-0.7, 1.3))))
        for _ in range(m)
    )
    return PronyKernel(terms)
