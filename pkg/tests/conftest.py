import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", derandomize=True, max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_density(rng, dim=2):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_bloch(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_cptp_affine(rng):
    """Random qubit channel: Ginibre Choi, trace-preservation enforced."""
    from nonmarkov.channels import AffineMap
    from nonmarkov.linalg import partial_trace

    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    chi = g @ g.conj().T
    q = partial_trace(chi, traced="second")
    w, v = np.linalg.eigh(q)
    q_isqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    chi = np.kron(q_isqrt, np.eye(2)) @ chi @ np.kron(q_isqrt, np.eye(2)).conj().T
    # read the affine form off the Choi blocks
    from nonmarkov.linalg import PAULIS
    kraus_blocks = chi.reshape(2, 2, 2, 2)
    m = np.zeros((3, 3))
    kappa = np.zeros(3)

    def apply_via_choi(x):
        out = np.zeros((2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                out += x[i, j] * chi[2 * i:2 * i + 2, 2 * j:2 * j + 2]
        return out

    for col, s in enumerate(PAULIS[1:]):
        img = apply_via_choi(s)
        for row, sr in enumerate(PAULIS[1:]):
            m[row, col] = 0.5 * np.trace(sr @ img).real
    img = apply_via_choi(np.eye(2, dtype=complex))
    for row, sr in enumerate(PAULIS[1:]):
        kappa[row] = 0.5 * np.trace(sr @ img).real
    return AffineMap(m, kappa)
