import math

import numpy as np
import pytest

# Symplectic form in mode-major quadrature ordering (x_L, p_L, x_G, p_G).
OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def passive_symplectic(u: np.ndarray) -> np.ndarray:
    """Quadrature symplectic of a 2x2 mode-space unitary (beam splitter
    plus phases)."""
    s = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            s[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = [
                [u[i, j].real, -u[i, j].imag],
                [u[i, j].imag, u[i, j].real],
            ]
    return s


def random_unitary(rng, n=2) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_symplectic(rng, r_max=1.0) -> np.ndarray:
    """Random two-mode symplectic: passive * squeeze * passive."""
    r1, r2 = rng.uniform(-r_max, r_max, size=2)
    squeeze = np.diag([math.exp(r1), math.exp(-r1), math.exp(r2), math.exp(-r2)])
    return (
        passive_symplectic(random_unitary(rng))
        @ squeeze
        @ passive_symplectic(random_unitary(rng))
    )


def random_physical_xp(rng, r_max=1.0, nu_max=4.0) -> np.ndarray:
    """Random physical quadrature covariance S diag(nu) S^T with nu >= 1."""
    nu1, nu2 = rng.uniform(1.0, nu_max, size=2)
    s = random_symplectic(rng, r_max)
    sigma = s @ np.diag([nu1, nu1, nu2, nu2]) @ s.T
    return 0.5 * (sigma + sigma.T)


def random_separable_xp(rng, nu_max=3.0, noise=1.0) -> np.ndarray:
    """Product state plus classical (positive-semidefinite) noise: separable."""
    nus = rng.uniform(1.0, nu_max, size=2)
    base = np.diag([nus[0], nus[0], nus[1], nus[1]])
    r = rng.normal(scale=noise, size=(4, 4))
    sigma = base + r @ r.T * 0.25
    return 0.5 * (sigma + sigma.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
