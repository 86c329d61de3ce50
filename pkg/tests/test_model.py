import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from gainloss import (
    ModelParams,
    RegimeKind,
    classify_regime,
    effective_gain,
    eigenvalues,
    mean_field_evolve,
    mean_field_hamiltonian,
    pt_eigenvalues,
    thresholds,
)
from gainloss.errors import NonPositiveEffectiveGain, NotPTSymmetric

FIG6 = ModelParams(g=2.0, gamma_L=2.88, gamma_G=1.2, Gamma_G=2.32)


def random_params(rng, n):
    for _ in range(n):
        g, gl, gg, big = rng.uniform(0.0, 3.0, size=4)
        yield ModelParams(g, gl, gg, big)


class TestParams:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            ModelParams(1.0, -0.1, 0.0, 0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ModelParams(1.0, math.inf, 0.0, 0.0)

    def test_effective_gain_examples(self):
        assert effective_gain(ModelParams(1.0, 1.0, 0.0, 1.0)) == 1.0
        assert effective_gain(ModelParams(2.0, 0.0, 1.2, 2.32)) == pytest.approx(1.12)
        assert effective_gain(ModelParams(1.0, 0.0, 2.0, 1.0)) == -1.0


class TestHamiltonian:
    def test_hermitian_limit(self):
        h = mean_field_hamiltonian(ModelParams(1.0, 0.0, 0.0, 0.0))
        assert np.allclose(h, [[0, 1], [1, 0]])

    def test_balanced(self):
        h = mean_field_hamiltonian(ModelParams(1.0, 0.5, 0.0, 0.5))
        assert np.allclose(h, [[-0.5j, 1], [1, 0.5j]])

    def test_fig6_point(self):
        h = mean_field_hamiltonian(FIG6)
        assert np.allclose(h, [[-2.88j, 2], [2, 1.12j]])


class TestEigenvalues:
    def test_real_pair_below_ep(self):
        s = eigenvalues(ModelParams(1.0, 0.5, 0.0, 0.5))
        assert s.e_plus == pytest.approx(math.sqrt(3) / 2)
        assert s.e_minus == pytest.approx(-math.sqrt(3) / 2)
        assert not s.is_coalesced

    def test_pt_ep(self):
        s = eigenvalues(ModelParams(1.0, 1.0, 0.0, 1.0))
        assert abs(s.e_plus) < 1e-12 and abs(s.e_minus) < 1e-12
        assert s.is_coalesced

    def test_non_pt_ep(self):
        s = eigenvalues(FIG6)
        assert s.e_plus == pytest.approx(-0.88j)
        assert s.e_minus == pytest.approx(-0.88j)
        assert s.is_coalesced

    def test_trace_and_det_identities(self, rng):
        # det H = gamma_L * eff_gain - g^2 by direct expansion of the
        # 2x2 matrix; the product identity is checked against that.
        for p in random_params(rng, 500):
            s = eigenvalues(p)
            gt = p.effective_gain
            assert s.e_plus + s.e_minus == pytest.approx(
                -1j * (p.gamma_L - gt), abs=1e-10
            )
            assert s.e_plus * s.e_minus == pytest.approx(
                p.gamma_L * gt - p.g**2, abs=1e-10
            )

    def test_matches_dense_eigensolver(self, rng):
        for p in random_params(rng, 500):
            s = eigenvalues(p)
            w = np.linalg.eigvals(mean_field_hamiltonian(p))
            # match by closest pairing; sorting is unstable at rounding level
            d1 = abs(s.e_plus - w[0]) + abs(s.e_minus - w[1])
            d2 = abs(s.e_plus - w[1]) + abs(s.e_minus - w[0])
            assert min(d1, d2) < 1e-10


class TestPTEigenvalues:
    def test_unbroken(self):
        s = pt_eigenvalues(ModelParams(1.0, 0.5, 0.0, 0.5))
        assert s.e_plus == pytest.approx(math.sqrt(3) / 2)

    def test_ep(self):
        s = pt_eigenvalues(ModelParams(1.0, 1.0, 0.0, 1.0))
        assert s.e_plus == 0 and s.e_minus == 0

    def test_broken_imaginary(self):
        s = pt_eigenvalues(ModelParams(1.0, 1.5, 0.0, 1.5))
        assert s.e_plus == pytest.approx(1j * math.sqrt(1.25))
        assert s.e_minus == pytest.approx(-1j * math.sqrt(1.25))

    def test_rejects_unbalanced(self):
        with pytest.raises(NotPTSymmetric):
            pt_eigenvalues(ModelParams(1.0, 0.4, 0.0, 0.5))

    def test_agrees_with_general_route(self, rng):
        for _ in range(200):
            g, gt = rng.uniform(0.01, 3.0, size=2)
            p = ModelParams(g, gt, 0.0, gt)
            a = pt_eigenvalues(p)
            b = eigenvalues(p)
            scale = max(abs(b.e_plus), 1e-30)
            assert abs(a.e_plus - b.e_plus) <= 1e-12 * scale
            assert abs(a.e_minus - b.e_minus) <= 1e-12 * scale


class TestThresholds:
    def test_fig6_values(self):
        th = thresholds(ModelParams(2.0, 0.0, 1.2, 2.32))
        assert th.gamma_L_PT == pytest.approx(1.12)
        assert th.gamma_L_EP == pytest.approx(2.88)
        assert th.gamma_L_th_paper == pytest.approx(2 * 4 / 1.12)
        assert th.gamma_L_th_numeric == pytest.approx(4 / 1.12, abs=1e-8 * 2.0)

    def test_pt_line_own_ep(self):
        th = thresholds(ModelParams(1.0, 0.0, 0.0, 1.0))
        assert th.gamma_L_PT == pytest.approx(1.0)
        assert th.gamma_L_EP == pytest.approx(1.0)

    def test_rejects_net_loss(self):
        with pytest.raises(NonPositiveEffectiveGain):
            thresholds(ModelParams(1.0, 0.0, 1.0, 0.5))

    def test_ordering_when_gain_below_g(self, rng):
        for _ in range(100):
            g = rng.uniform(0.1, 3.0)
            gt = rng.uniform(0.01, 0.99) * g
            gg = rng.uniform(0.0, 2.0)
            th = thresholds(ModelParams(g, 0.0, gg, gg + gt))
            assert th.gamma_L_PT < th.gamma_L_EP < th.gamma_L_th_numeric


class TestClassifyRegime:
    def test_pt_unbroken_marginal(self):
        r = classify_regime(ModelParams(1.0, 0.5, 0.0, 0.5))
        assert r.kind is RegimeKind.PT_UNBROKEN
        assert not r.stable

    def test_non_pt_below_ep_stable(self):
        r = classify_regime(ModelParams(2.0, 1.6, 1.2, 2.32))
        assert r.kind is RegimeKind.NON_PT_BELOW_EP
        assert r.stable

    def test_non_pt_above_ep_stable(self):
        r = classify_regime(ModelParams(2.0, 3.2, 1.2, 2.32))
        assert r.kind is RegimeKind.NON_PT_ABOVE_EP
        assert r.stable

    def test_pt_ep_and_broken(self):
        assert (
            classify_regime(ModelParams(1.0, 1.0, 0.0, 1.0)).kind
            is RegimeKind.PT_EXCEPTIONAL_POINT
        )
        assert (
            classify_regime(ModelParams(1.0, 1.5, 0.0, 1.5)).kind
            is RegimeKind.PT_BROKEN
        )

    def test_non_pt_at_ep(self):
        assert classify_regime(FIG6).kind is RegimeKind.NON_PT_AT_EP

    def test_scale_invariance(self, rng):
        for p in random_params(rng, 100):
            base = classify_regime(p)
            for c in (1e-3, 7.5, 1e4):
                scaled = classify_regime(
                    ModelParams(c * p.g, c * p.gamma_L, c * p.gamma_G, c * p.Gamma_G)
                )
                assert scaled.kind is base.kind
                assert scaled.stable == base.stable


class TestMeanFieldEvolve:
    def test_rabi_oscillation(self):
        out = mean_field_evolve(
            (1.0, 0.0), ModelParams(1.0, 0.0, 0.0, 0.0), math.pi / 2
        )
        assert np.allclose(out, [0.0, -1.0j], atol=1e-12)

    def test_zero_fixed_point(self):
        out = mean_field_evolve((0.0, 0.0), FIG6, 3.7)
        assert np.all(out == 0)

    def test_ep_jordan_block_vs_integrator(self):
        p = ModelParams(1.0, 1.0, 0.0, 1.0)
        h = mean_field_hamiltonian(p)
        sol = solve_ivp(
            lambda _t, y: -1j * (h @ y),
            (0.0, 2.0),
            np.array([1.0 + 0j, 1.0 + 0j]),
            rtol=1e-12,
            atol=1e-14,
        )
        out = mean_field_evolve((1.0, 1.0), p, 2.0)
        assert np.abs(out - sol.y[:, -1]).max() < 1e-8

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            mean_field_evolve((1.0, 0.0), FIG6, -0.1)
