"""Tests of the covariance propagator and stationary solver.

The single-mode limits (g = 0) have textbook closed forms which pin both
the drift and the diffusion normalization; everything else is checked by
internal consistency (semigroup property, adaptive cross-integration,
spectral relations to the mean-field matrix).
"""

import math

import numpy as np
import pytest

from gainloss import dynamics, gaussian
from gainloss.errors import MarginallyStable, Unstable
from gainloss.model import ModelParams, eigenvalues

FIG8_BELOW = ModelParams(g=2.0, gamma_L=1.6, gamma_G=1.2, Gamma_G=2.32)
PT_POINT = ModelParams(g=1.0, gamma_L=0.5, gamma_G=0.0, Gamma_G=0.5)


class TestBuild:
    def test_diffusion_matrix(self):
        p = ModelParams(g=1.0, gamma_L=0.5, gamma_G=0.25, Gamma_G=0.75)
        yd = dynamics.build_drift_diffusion(p)
        assert np.allclose(yd.d, np.diag([0.25, 0.5, 0.25, 0.5]))

    def test_drift_spectrum_matches_mean_field(self):
        p = FIG8_BELOW
        spec = eigenvalues(p)
        ev = np.linalg.eigvals(dynamics.build_drift_diffusion(p).y)
        expected = [
            -1j * spec.e_plus,
            -1j * spec.e_minus,
            1j * spec.e_plus.conjugate(),
            1j * spec.e_minus.conjugate(),
        ]
        for w in expected:
            assert min(abs(ev - w)) < 1e-10

    def test_drift_is_complex_symmetric(self):
        # The coupling block of H is real symmetric, so Y^T = Y.
        y = dynamics.build_drift_diffusion(FIG8_BELOW).y
        assert np.abs(y - y.T).max() == 0.0


class TestPropagate:
    def test_time_zero_identity(self):
        res = dynamics.propagate(gaussian.vacuum_covariance(), FIG8_BELOW, 0.0)
        assert np.allclose(res.sigma_t, np.eye(4), atol=1e-14)
        assert not res.diverged

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            dynamics.propagate(np.eye(4), FIG8_BELOW, -0.1)

    def test_single_mode_thermalization(self):
        # g = 0 decouples the modes; mode G relaxes with
        # n(t) = n_ss + (n0 - n_ss) e^{-2(gamma_G - Gamma_G) t}.
        # With gamma_G = 1, Gamma_G = 0.5: n_ss = 1, rate 1.
        p = ModelParams(g=0.0, gamma_L=0.3, gamma_G=1.0, Gamma_G=0.5)
        res = dynamics.propagate(gaussian.vacuum_covariance(), p, 1.0)
        n_t = 1.0 - math.exp(-1.0)
        assert res.sigma_t[1, 1].real == pytest.approx(2.0 * n_t + 1.0, rel=1e-12)
        # Mode L decays toward vacuum from vacuum: stays exactly at 1.
        assert res.sigma_t[0, 0].real == pytest.approx(1.0, rel=1e-12)

    def test_gain_only_growth(self):
        p = ModelParams(g=0.0, gamma_L=0.0, gamma_G=0.0, Gamma_G=0.5)
        res = dynamics.propagate(gaussian.vacuum_covariance(), p, 2.0)
        n_t = math.exp(2.0 * p.Gamma_G * 2.0) - 1.0
        assert res.sigma_t[1, 1].real == pytest.approx(2.0 * n_t + 1.0, rel=1e-12)

    def test_semigroup_property(self):
        s1 = dynamics.propagate(gaussian.vacuum_covariance(), FIG8_BELOW, 0.7)
        s2 = dynamics.propagate(s1.sigma_t, FIG8_BELOW, 0.4)
        direct = dynamics.propagate(gaussian.vacuum_covariance(), FIG8_BELOW, 1.1)
        scale = np.abs(direct.sigma_t).max()
        assert np.abs(s2.sigma_t - direct.sigma_t).max() < 1e-9 * scale

    def test_stepper_matches_propagate(self):
        step = dynamics.make_stepper(FIG8_BELOW, 0.05)
        sigma = gaussian.vacuum_covariance()
        for _ in range(20):
            sigma = step(sigma)
        direct = dynamics.propagate(gaussian.vacuum_covariance(), FIG8_BELOW, 1.0)
        scale = np.abs(direct.sigma_t).max()
        assert np.abs(sigma - direct.sigma_t).max() < 1e-10 * scale

    def test_closed_limit_preserves_purity(self):
        # No dissipation at all: the drift is -i times a Hermitian matrix,
        # the evolution is unitary and det sigma stays at 1.
        p = ModelParams(g=1.3, gamma_L=0.0, gamma_G=0.0, Gamma_G=0.0)
        for t in (0.3, 1.7, 4.0):
            res = dynamics.propagate(gaussian.vacuum_covariance(), p, t)
            assert abs(np.linalg.det(res.sigma_t)) == pytest.approx(1.0, rel=1e-10)

    def test_exceptional_point_regular(self):
        # At the exceptional point the drift is defective; the exponential
        # route must still agree with adaptive integration.
        p = ModelParams(g=2.0, gamma_L=2.88, gamma_G=1.2, Gamma_G=2.32)
        t_grid = np.linspace(0.0, 2.0, 5)
        adaptive = dynamics.propagate_adaptive(
            gaussian.vacuum_covariance(), p, t_grid, rtol=1e-12
        )
        for res_a in adaptive:
            res_e = dynamics.propagate(gaussian.vacuum_covariance(), p, res_a.t)
            scale = max(np.abs(res_e.sigma_t).max(), 1.0)
            assert np.abs(res_a.sigma_t - res_e.sigma_t).max() < 1e-8 * scale

    def test_adaptive_cross_check(self):
        t_grid = np.linspace(0.0, 3.0, 7)
        adaptive = dynamics.propagate_adaptive(
            gaussian.vacuum_covariance(), FIG8_BELOW, t_grid
        )
        assert len(adaptive) == 7
        for res_a in adaptive:
            res_e = dynamics.propagate(gaussian.vacuum_covariance(), FIG8_BELOW, res_a.t)
            scale = max(np.abs(res_e.sigma_t).max(), 1.0)
            assert np.abs(res_a.sigma_t - res_e.sigma_t).max() < 1e-8 * scale

    def test_adaptive_empty_grid(self):
        assert dynamics.propagate_adaptive(np.eye(4), FIG8_BELOW, []) == []

    def test_physicality_preserved(self):
        # The smaller symplectic eigenvalue must never dip below 1.
        for t in np.linspace(0.1, 3.0, 8):
            res = dynamics.propagate(gaussian.vacuum_covariance(), FIG8_BELOW, t)
            nu_m, _ = gaussian.symplectic_eigenvalues(
                gaussian.to_quadrature(res.sigma_t)
            )
            assert nu_m >= 1.0 - 1e-8

    def test_divergence_flag(self):
        p = ModelParams(g=0.0, gamma_L=0.0, gamma_G=0.0, Gamma_G=1.0)
        res = dynamics.propagate(gaussian.vacuum_covariance(), p, 120.0)
        assert res.diverged


class TestStability:
    def test_kinds(self):
        assert dynamics.is_stable(FIG8_BELOW).kind == dynamics.Stability.STABLE
        assert dynamics.is_stable(PT_POINT).kind == dynamics.Stability.MARGINAL
        above = ModelParams(g=2.0, gamma_L=0.2, gamma_G=0.0, Gamma_G=3.0)
        assert dynamics.is_stable(above).kind == dynamics.Stability.UNSTABLE

    def test_margin_matches_growth_rate(self):
        from gainloss.model import growth_rate

        for p in (FIG8_BELOW, PT_POINT):
            rep = dynamics.is_stable(p)
            assert rep.margin == pytest.approx(growth_rate(p), abs=1e-10)


class TestStationary:
    def test_decoupled_example(self):
        # g = 0, mode G thermal with n = Gamma~/(2(gamma_G - Gamma_G))... here
        # gamma_G = 1, Gamma_G = 0.5 gives n_ss = 1 so diag (1,1,3,3).
        p = ModelParams(g=0.0, gamma_L=0.4, gamma_G=1.0, Gamma_G=0.5)
        sigma = dynamics.stationary(p)
        assert np.allclose(sigma, np.diag([1.0, 3.0, 1.0, 3.0]), atol=1e-10)

    def test_long_time_convergence(self):
        sigma_ss = dynamics.stationary(FIG8_BELOW)
        res = dynamics.propagate(gaussian.vacuum_covariance(), FIG8_BELOW, 80.0)
        scale = np.abs(sigma_ss).max()
        assert np.abs(res.sigma_t - sigma_ss).max() < 1e-8 * scale

    def test_residual_is_zero(self):
        yd = dynamics.build_drift_diffusion(FIG8_BELOW)
        sigma = dynamics.stationary(FIG8_BELOW)
        res = yd.y @ sigma + sigma @ yd.y.conj().T + 4.0 * yd.d
        assert np.abs(res).max() < 1e-11

    def test_marginal_raises(self):
        with pytest.raises(MarginallyStable):
            dynamics.stationary(PT_POINT)

    def test_unstable_raises(self):
        p = ModelParams(g=2.0, gamma_L=0.2, gamma_G=0.0, Gamma_G=3.0)
        with pytest.raises(Unstable):
            dynamics.stationary(p)

    def test_stationary_is_physical(self):
        sigma = dynamics.stationary(FIG8_BELOW)
        nu_m, _ = gaussian.symplectic_eigenvalues(gaussian.to_quadrature(sigma))
        assert nu_m >= 1.0 - 1e-10


class TestPrecisePropagation:
    """Arbitrary-precision path for states beyond float64 dynamic range."""

    def test_matches_float_path_in_moderate_regime(self):
        # [DERIVED] same generator, so entries must agree to rounding.
        p = ModelParams(g=1.5, gamma_L=1.0, gamma_G=0.4, Gamma_G=0.6)
        s0 = gaussian.vacuum_covariance()
        for t in (0.0, 0.7, 5.0):
            sf = dynamics.propagate(s0, p, t).sigma_t
            sp = dynamics.propagate_precise(s0, p, t)
            spf = np.array(
                [[complex(sp[i, j]) for j in range(4)] for i in range(4)]
            )
            scale = max(np.abs(sf).max(), 1.0)
            assert np.abs(sf - spf).max() / scale < 1e-13

    def test_required_digits_grows_with_horizon(self):
        p = ModelParams(g=1.0, gamma_L=1.5, gamma_G=0.0, Gamma_G=1.5)
        d = [dynamics.required_digits(p, t) for t in (1.0, 10.0, 40.0)]
        assert d[0] < d[1] < d[2]
        # [DERIVED] stable point: no growth, only the working margin.
        stable = ModelParams(g=2.0, gamma_L=1.6, gamma_G=1.2, Gamma_G=2.32)
        assert dynamics.required_digits(stable, 100.0) == 40

    def test_small_symplectic_eigenvalue_survives_growth(self):
        # [DERIVED] unstable balanced point gamma_L = Gamma_G = 3g/2:
        # entries reach ~1e19 by t=20 while nu_minus stays order one.
        # The float path provably cannot keep both; the precise path must.
        p = ModelParams(g=1.0, gamma_L=1.5, gamma_G=0.0, Gamma_G=1.5)
        s0 = gaussian.vacuum_covariance()
        reps = [
            gaussian.correlation_report_precise(
                dynamics.propagate_precise(s0, p, t)
            )
            for t in (20.0, 30.0, 40.0)
        ]
        # [DERIVED] mutual information grows linearly at rate
        # 2*sqrt(Gamma_eff^2 - g^2) = sqrt(5); increments over dt=10 agree.
        inc1 = reps[1].mutual_information - reps[0].mutual_information
        inc2 = reps[2].mutual_information - reps[1].mutual_information
        rate = 2.0 * math.sqrt(1.5**2 - 1.0)
        assert abs(inc1 / (10.0 * rate) - 1.0) < 0.01
        assert abs(inc2 / (10.0 * rate) - 1.0) < 0.005
        # Discord has reached a strictly positive plateau.
        ds = [r.discord_LG for r in reps]
        assert all(d > 0.01 for d in ds)
        assert abs(ds[2] - ds[0]) < 1e-6
