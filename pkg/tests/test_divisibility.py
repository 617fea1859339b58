import numpy as np
import pytest

from nonmarkov.divisibility import (canonical_rates, intermediate,
                                    intermediate_step, is_p_divisible_step)
from nonmarkov.errors import ValidationError
from nonmarkov.families import (family_dephasing, family_enm, family_gad,
                                family_phase_covariant)


class TestIntermediate:
    def test_s_equals_t_is_identity(self):
        fam = family_gad()
        v = intermediate(fam, 0.7, 0.7)
        assert np.allclose(v.affine.matrix4(), np.eye(4), atol=1e-12)
        assert not v.pseudo_inverse_used

    def test_semigroup_step_independent_of_s(self):
        fam = family_dephasing(alpha=0.0)
        eps = 0.05
        v1 = intermediate_step(fam, 0.2, eps)
        v2 = intermediate_step(fam, 1.4, eps)
        assert np.allclose(v1.affine.matrix4(), v2.affine.matrix4(), atol=1e-10)
        # equals exp(eps * generator): lambda ratio e^{-eps}
        assert v1.affine.m[0, 0] == pytest.approx(np.exp(-eps), abs=1e-12)

    def test_enm_cp_indivisible_but_p_divisible(self):
        # short-step intermediate maps: negative Choi eigenvalue at every t > 0,
        # yet positive (Bloch-contracting) at any step size
        fam = family_enm(c=3.0)
        for s in [0.1, 0.5, 1.0, 2.0, 2.9]:
            v = intermediate_step(fam, s, 1e-3)
            assert v.min_choi_eig < 0.0
            assert is_p_divisible_step(v)
        for (s, t) in [(0.1, 0.4), (0.5, 1.2), (1.0, 2.8)]:
            v = intermediate(fam, s, t)
            sv = np.linalg.svd(v.affine.m, compute_uv=False)
            assert sv.max() <= 1.0 + 1e-12
            assert is_p_divisible_step(v)

    def test_dephasing_negative_rate_interval_not_p_divisible(self):
        fam = family_dephasing(alpha=5.0)
        v = intermediate(fam, 0.5, 0.6)  # gamma_z < 0 here; Bloch disk stretches
        assert not is_p_divisible_step(v)

    def test_identity_p_divisible(self):
        fam = family_gad()
        assert is_p_divisible_step(intermediate(fam, 0.3, 0.3))

    def test_composition_property(self):
        fam = family_gad()
        grid = np.linspace(0.0, 2.4, 7)
        for i, s in enumerate(grid):
            for u in grid[i:]:
                for t in grid[grid >= u]:
                    v_st = intermediate(fam, s, t)
                    v_ut = intermediate(fam, u, t)
                    v_su = intermediate(fam, s, u)
                    if v_st.pseudo_inverse_used or v_ut.pseudo_inverse_used \
                            or v_su.pseudo_inverse_used:
                        continue
                    comp = v_ut.affine.compose(v_su.affine)
                    assert np.allclose(comp.matrix4(), v_st.affine.matrix4(), atol=1e-8)

    def test_gad_unital_nonunital_composition_relations(self):
        fam = family_gad()
        s, t = 0.6, 1.7
        v = intermediate(fam, s, t)
        m_t, k_t = fam.affine(t).m, fam.affine(t).kappa
        m_s, k_s = fam.affine(s).m, fam.affine(s).kappa
        assert np.allclose(v.affine.m @ m_s, m_t, atol=1e-8)
        assert np.allclose(v.affine.kappa + v.affine.m @ k_s, k_t, atol=1e-8)

    def test_pseudo_inverse_flag_on_singular_map(self):
        fam = family_dephasing(alpha=5.0)
        t_star = np.arcsinh(1.0 / 5.0)
        v = intermediate(fam, t_star, t_star + 1e-3)
        assert v.pseudo_inverse_used

    def test_probe_count_validation(self):
        fam = family_gad()
        with pytest.raises(ValueError):
            is_p_divisible_step(intermediate(fam, 0.1, 0.2), n_probe=10)


class TestCanonicalRates:
    def test_dephasing_round_trip(self):
        # extraction is contract-limited to lambda > 0, i.e. t below the
        # singularity at asinh(1/alpha) ~ 0.1987
        fam = family_dephasing(alpha=5.0)
        from nonmarkov.families import dephasing_rate
        rate = dephasing_rate(5.0)
        for t in [0.05, 0.12, 0.17]:
            g = canonical_rates(fam, t, dt=1e-6)
            assert g[2] == pytest.approx(rate(t), rel=1e-6, abs=1e-8)
            assert abs(g[0]) < 1e-8 and abs(g[1]) < 1e-8

    def test_lambda_nonpositive_raises(self):
        fam = family_dephasing(alpha=5.0)
        with pytest.raises(ValidationError):
            canonical_rates(fam, 0.5)

    def test_enm_rates(self):
        c = 3.0
        fam = family_enm(c=c)
        for t in [0.2, 0.9, 2.5]:
            g = canonical_rates(fam, t, dt=1e-4)
            assert g[0] == pytest.approx(c / 2, abs=1e-5)
            assert g[1] == pytest.approx(c / 2, abs=1e-5)
            assert g[2] == pytest.approx(-(c / 2) * np.tanh(t), abs=1e-5)

    def test_depolarizing_semigroup_equal_rates(self):
        from nonmarkov.channels import AffineMap, DynamicalMap
        g0 = 0.4

        def lambdas(t):
            return np.exp(-4 * g0 * t) * np.ones(3)

        fam = DynamicalMap("depol", lambda t: AffineMap(np.diag(lambdas(t)), np.zeros(3)),
                           domain=(0.0, 3.0), pauli_lambdas=lambdas)
        g = canonical_rates(fam, 0.8)
        assert np.allclose(g, g0, atol=1e-6)

    def test_phase_covariant_delegation(self):
        fam = family_phase_covariant(lambda t: np.exp(-t), lambda t: np.exp(-t),
                                     lambda t: 0.0, domain=(0.0, 2.0))
        g = canonical_rates(fam, 0.5)
        # (gamma_+/2, gamma_-/2, gamma_z) = (1/4, 1/4, 1/4) for this family
        assert np.allclose(g, 0.25, atol=1e-6)

    def test_cp_verdict_matches_rate_signs(self):
        eps = 1e-4 * 3.0
        samples = {
            "enm": np.linspace(0.05, 2.8, 12),          # gamma_3 < 0 throughout
            "dephasing": np.linspace(0.02, 0.17, 6),    # gamma_z > 0, lambda > 0
        }
        for fam in (family_enm(c=3.0), family_dephasing(alpha=5.0)):
            for t in samples[fam.name]:
                g_min = canonical_rates(fam, float(t), dt=1e-6).min()
                v = intermediate_step(fam, float(t), eps)
                assert (g_min < -1e-6) == (v.min_choi_eig < -1e-8 * eps)

    def test_unsupported_family_raises(self):
        from nonmarkov.channels import AffineMap, DynamicalMap
        fam = DynamicalMap("plain", lambda t: AffineMap(np.eye(3) * np.exp(-t),
                                                        np.zeros(3)),
                           domain=(0.0, 1.0))
        with pytest.raises(ValidationError):
            canonical_rates(fam, 0.3)
