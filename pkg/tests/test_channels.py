import numpy as np
import pytest

from conftest import random_cptp_affine, random_density
from nonmarkov.channels import (AffineMap, DynamicalMap, GeneratorSpec,
                                KrausSet, affine_from_kraus,
                                apply_channel_4x4, choi_from_affine,
                                from_generator, is_cptp_affine,
                                kraus_from_affine, propagate_generator,
                                purity)
from nonmarkov.errors import (IntegrationError, NotCompletelyPositiveError,
                              ValidationError)
from nonmarkov.linalg import I2, SX, SY, SZ, density_from_bloch


class TestAffineKraus:
    def test_identity_kraus(self):
        a = affine_from_kraus(KrausSet((I2,)))
        assert np.allclose(a.m, np.eye(3), atol=1e-12)
        assert np.allclose(a.kappa, 0.0, atol=1e-12)

    @pytest.mark.parametrize("q", [0.0, 0.3, 0.5, 0.9])
    def test_dephasing_kraus(self, q):
        ks = KrausSet((np.sqrt(1 - q) * I2, np.sqrt(q) * SZ))
        a = affine_from_kraus(ks)
        assert np.allclose(a.m, np.diag([1 - 2 * q, 1 - 2 * q, 1.0]), atol=1e-12)
        assert np.allclose(a.kappa, 0.0, atol=1e-12)

    def test_gad_affine(self):
        # lambda_1 = lambda_2 = sqrt(1-nu), lambda_3 = 1-nu, kappa_z = (1-2p) nu
        from nonmarkov.families import family_gad
        fam = family_gad(omega_p=5.0)
        t = 0.8
        nu = 1 - np.exp(-t)
        p = np.sin(5 * t) ** 2
        a = fam.affine(t)
        assert np.allclose(np.diag(a.m), [np.sqrt(1 - nu), np.sqrt(1 - nu), 1 - nu])
        assert np.allclose(a.kappa, [0, 0, (1 - 2 * p) * nu])

    def test_round_trip_on_pauli_eigenstates(self, rng):
        for _ in range(10):
            a = random_cptp_affine(rng)
            ks = kraus_from_affine(a)
            for v in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]:
                rho = density_from_bloch(v)
                assert np.max(np.abs(a.apply_density(rho) - ks.apply(rho))) < 1e-8

    def test_non_cp_reports_negativity(self):
        # universal-NOT-like map lambda = (1, 1, -1)
        a = AffineMap(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
        with pytest.raises(NotCompletelyPositiveError) as exc:
            kraus_from_affine(a)
        assert exc.value.min_choi_eig == pytest.approx(-1.0, abs=1e-9)

    def test_completeness_validation(self):
        with pytest.raises(ValidationError):
            KrausSet((0.9 * I2,))


class TestChoi:
    def test_identity_channel(self):
        chi = choi_from_affine(AffineMap.identity())
        psi = np.zeros(4)
        psi[0] = psi[3] = 1.0
        assert np.allclose(chi, np.outer(psi, psi), atol=1e-12)
        assert np.trace(chi).real == pytest.approx(2.0)
        assert np.linalg.matrix_rank(chi, tol=1e-9) == 1

    def test_completely_depolarizing(self):
        chi = choi_from_affine(AffineMap(np.zeros((3, 3)), np.zeros(3)))
        assert np.allclose(chi, np.eye(4) / 2, atol=1e-12)

    def test_dephasing_half(self):
        a = affine_from_kraus(KrausSet((np.sqrt(0.5) * I2, np.sqrt(0.5) * SZ)))
        w = np.linalg.eigvalsh(choi_from_affine(a))
        assert np.allclose(np.sort(w), [0, 0, 1, 1], atol=1e-12)


class TestCptp:
    def test_identity(self):
        rep = is_cptp_affine(AffineMap.identity())
        assert rep.cp and rep.min_choi_eig == pytest.approx(0.0, abs=1e-12)
        assert rep.tp_defect == pytest.approx(0.0, abs=1e-12)

    def test_universal_not_like(self):
        rep = is_cptp_affine(AffineMap(np.diag([1.0, 1.0, -1.0]), np.zeros(3)))
        assert not rep.cp
        assert rep.min_choi_eig == pytest.approx(-1.0, abs=1e-9)

    def test_enm_always_cptp(self):
        from nonmarkov.families import family_enm
        fam = family_enm(c=3.0)
        for t in np.linspace(0, 3, 31):
            rep = fam.is_cptp(float(t))
            assert rep.cp and rep.tp_defect <= 1e-8


class TestGenerator:
    def test_constant_dephasing_rate(self):
        gamma = 0.7
        gen = GeneratorSpec(lindblad_ops=((SZ, lambda t: gamma),))
        for t in [0.3, 1.1]:
            a = propagate_generator(gen, t, dt=1e-4)
            lam = np.exp(-2 * gamma * t)
            assert np.allclose(np.diag(a.m), [lam, lam, 1.0], atol=1e-6)
            assert np.allclose(a.kappa, 0.0, atol=1e-12)

    def test_enm_closed_form(self):
        c = 3.0
        gen = GeneratorSpec(lindblad_ops=(
            (SX, lambda t: c / 2), (SY, lambda t: c / 2),
            (SZ, lambda t: -(c / 2) * np.tanh(t))))
        t = 1.2
        a = propagate_generator(gen, t, dt=1e-4)
        l12 = (np.exp(-t) * np.cosh(t)) ** c
        assert np.allclose(np.diag(a.m), [l12, l12, np.exp(-2 * c * t)], atol=1e-6)

    def test_zero_generator(self):
        gen = GeneratorSpec(lindblad_ops=((SZ, lambda t: 0.0),))
        a = propagate_generator(gen, 2.5, dt=1e-2)
        assert np.allclose(a.matrix4(), np.eye(4), atol=1e-12)

    def test_identity_at_zero(self):
        gen = GeneratorSpec(lindblad_ops=((SZ, lambda t: 1.0),))
        a = propagate_generator(gen, 0.0, dt=1e-3)
        assert np.allclose(a.matrix4(), np.eye(4))

    def test_singular_rate_names_time(self):
        gen = GeneratorSpec(lindblad_ops=((SZ, lambda t: 1.0 / (t - 0.5)),))
        with pytest.raises(IntegrationError) as exc:
            propagate_generator(gen, 1.0, dt=1e-3)
        # the named time must sit near the singularity
        assert exc.value.t is None or abs(exc.value.t - 0.5) < 0.1

    def test_cached_map_matches_direct(self):
        c = 1.5
        gen = GeneratorSpec(lindblad_ops=(
            (SX, lambda t: c / 2), (SY, lambda t: c / 2),
            (SZ, lambda t: -(c / 2) * np.tanh(t))))
        fam = from_generator("enm_gen", gen, domain=(0.0, 2.0), dt=1e-3)
        for t in [0.0, 0.51237, 1.0, 1.99]:
            direct = propagate_generator(gen, t, dt=1e-3)
            cached = fam.affine(t)
            assert np.allclose(cached.matrix4(), direct.matrix4(), atol=1e-9)


class TestPurity:
    def test_maximally_mixed(self):
        assert purity(I2 / 2) == pytest.approx(0.5)

    def test_pure(self):
        assert purity(np.diag([1.0, 0.0]).astype(complex)) == pytest.approx(1.0)

    def test_gad_image_of_maximally_mixed(self):
        from nonmarkov.families import family_gad
        fam = family_gad()
        for t in [0.4, 1.3]:
            tau3 = fam.affine(t).kappa[2]
            assert purity(fam.apply(I2 / 2, t)) == pytest.approx(0.5 * (1 + tau3 ** 2))

    def test_unital_maps_never_increase_purity(self, rng):
        from nonmarkov.families import family_dephasing, family_enm
        fams = [family_dephasing(alpha=0.0), family_enm(c=2.0)]
        states = [random_density(rng) for _ in range(100)]
        for fam in fams:
            for t in np.linspace(0.0, 2.0, 9):
                assert fam.affine(float(t)).is_unital(tol=1e-12)
                for rho in states:
                    assert purity(fam.apply(rho, float(t))) <= purity(rho) + 1e-9


def test_identity_at_t0_validation():
    with pytest.raises(ValidationError):
        DynamicalMap("bad", lambda t: AffineMap(0.5 * np.eye(3), np.zeros(3)),
                     domain=(0.0, 1.0))


def test_apply_channel_4x4_faithful(rng):
    # block application matches the Kraus action of I (x) Lambda
    a = random_cptp_affine(rng)
    ks = kraus_from_affine(a)
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    direct = sum(np.kron(I2, k) @ x @ np.kron(I2, k).conj().T for k in ks.operators)
    assert np.max(np.abs(apply_channel_4x4(a, x) - direct)) < 1e-9
