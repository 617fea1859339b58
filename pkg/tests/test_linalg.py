import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonmarkov.errors import DimensionError, DomainError, ValidationError
from nonmarkov.linalg import (I2, I4, SWAP, SX, SY, SZ, bloch_from_density,
                              density_from_bloch, fibonacci_directions,
                              herm_eig, hermitize, kron, matrix_log_psd,
                              partial_trace, partial_transpose,
                              psd_project_stack, trace_norm)


class TestTraceNorm:
    def test_sigma_z(self):
        assert trace_norm(SZ) == pytest.approx(2.0, abs=1e-12)

    def test_identity4(self):
        assert trace_norm(I4) == pytest.approx(4.0, abs=1e-12)

    def test_identity_channel_pdm(self):
        # SWAP/2 has eigenvalues {1/2, 1/2, 1/2, -1/2}
        assert trace_norm(SWAP / 2) == pytest.approx(2.0, abs=1e-12)
        eigs = np.sort(np.linalg.eigvalsh(SWAP / 2))
        assert np.allclose(eigs, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)

    def test_nonsquare_raises(self):
        with pytest.raises(DimensionError):
            trace_norm(np.ones((2, 3)))

    def test_lower_bound_by_trace(self, rng):
        for _ in range(50):
            a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            assert trace_norm(a) >= abs(np.trace(a)) - 1e-10

    def test_equality_for_psd(self, rng):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = g @ g.conj().T
        assert trace_norm(a) == pytest.approx(np.trace(a).real, rel=1e-12)


class TestHermEig:
    def test_sigma_x(self):
        w, _ = herm_eig(SX)
        assert np.allclose(w, [-1.0, 1.0], atol=1e-12)

    def test_maximally_mixed(self):
        w, _ = herm_eig(I2 / 2)
        assert np.allclose(w, [0.5, 0.5], atol=1e-12)

    def test_bell_combination(self):
        a = kron(SX, SX) + kron(SY, SY)
        w, _ = herm_eig(a)
        assert np.allclose(w, [-2.0, 0.0, 0.0, 2.0], atol=1e-12)

    def test_non_hermitian_raises(self):
        with pytest.raises(ValidationError):
            herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_reconstruction_random(self, rng):
        for _ in range(100):
            a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            a = hermitize(a)
            w, v = herm_eig(a)
            assert np.all(np.diff(w) >= -1e-12)
            recon = (v * w) @ v.conj().T
            assert np.max(np.abs(recon - a)) <= 1e-9


class TestPartialTranspose:
    def test_unnormalized_bell_to_swap(self):
        psi = np.zeros(4, dtype=complex)
        psi[0] = psi[3] = 1.0
        proj = np.outer(psi, psi.conj())
        swap4 = 2 * SWAP / 2 * 2  # explicit: SWAP itself
        assert np.allclose(partial_transpose(proj, "second"), SWAP, atol=1e-12)
        assert np.allclose(partial_transpose(proj, "first"), SWAP, atol=1e-12)

    def test_identity_fixed(self):
        assert np.allclose(partial_transpose(I4, "first"), I4)

    def test_involution(self, rng):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        for sub in ("first", "second"):
            assert np.allclose(partial_transpose(partial_transpose(a, sub), sub), a)

    def test_preserves_trace_and_hermiticity(self, rng):
        a = hermitize(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        pt = partial_transpose(a, "first")
        assert np.trace(pt) == pytest.approx(np.trace(a).real)
        assert np.max(np.abs(pt - pt.conj().T)) < 1e-12

    def test_wrong_dim(self):
        with pytest.raises(DimensionError):
            partial_transpose(np.eye(2), "first")


class TestKron:
    def test_identities(self):
        assert np.allclose(kron(I2, I2), I4)

    def test_sigma_zz(self):
        assert np.allclose(kron(SZ, SZ), np.diag([1, -1, -1, 1]))

    def test_swap_decomposition(self):
        s = 0.5 * sum(kron(p, p) for p in (I2, SX, SY, SZ))
        expected = np.zeros((4, 4))
        expected[0, 0] = expected[3, 3] = 1
        expected[1, 2] = expected[2, 1] = 1
        assert np.allclose(s, expected, atol=1e-12)
        assert np.allclose(SWAP, expected, atol=1e-12)


class TestBloch:
    def test_center(self):
        assert np.allclose(density_from_bloch([0, 0, 0]), I2 / 2)

    def test_north_pole(self):
        assert np.allclose(density_from_bloch([0, 0, 1]), np.diag([1.0, 0.0]))

    def test_plus_x(self):
        assert np.allclose(density_from_bloch([1, 0, 0]), (I2 + SX) / 2)

    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_round_trip(self, x):
        assert np.allclose(bloch_from_density(density_from_bloch(x)), x, atol=1e-12)


class TestMatrixLog:
    def test_identity(self):
        assert np.allclose(matrix_log_psd(I2), np.zeros((2, 2)), atol=1e-12)

    def test_maximally_mixed_base2(self):
        assert np.allclose(matrix_log_psd(np.diag([0.5, 0.5])), np.diag([-1.0, -1.0]))

    def test_support_convention(self):
        out = matrix_log_psd(np.diag([1.0, 0.0]), zero_floor=1e-15)
        assert out[0, 0] == pytest.approx(0.0)
        assert out[1, 1] < -40  # log2 of the floor

    def test_negative_raises(self):
        with pytest.raises(DomainError):
            matrix_log_psd(np.diag([1.0, -1e-3]))


def test_partial_trace():
    a = kron(np.diag([0.25, 0.75]).astype(complex), I2 / 2)
    assert np.allclose(partial_trace(a, traced="second"), np.diag([0.25, 0.75]))
    assert np.allclose(partial_trace(a, traced="first"), I2 / 2)


def test_psd_project_stack(rng):
    mats = rng.normal(size=(5, 2, 2)) + 1j * rng.normal(size=(5, 2, 2))
    mats = 0.5 * (mats + np.conjugate(np.swapaxes(mats, -1, -2)))
    proj = psd_project_stack(mats)
    for p in proj:
        assert np.linalg.eigvalsh(p).min() >= -1e-12


def test_fibonacci_directions_unit():
    d = fibonacci_directions(128)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)
    assert abs(d.mean(axis=0)).max() < 0.05
