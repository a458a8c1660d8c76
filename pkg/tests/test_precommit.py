import numpy as np
import pytest

import ambmerton as am
from ambmerton.precommit import precommit_softmax_weight


class TestPrecommitValue:
    def test_no_investment(self, benchmark):
        for alpha, x0 in ((0.5, 1.0), (-1.0, 3.0)):
            got = am.precommit_value(benchmark, alpha, x0, 10.0, [0.0])
            assert got == pytest.approx(x0**alpha / alpha, rel=1e-15)

    def test_degenerate_prior_at_merton_recovers_merton_value(self):
        # plug kappa_Mer into the closed form: the exponent collapses to
        # alpha gamma theta^2 T / 2
        model = am.TwoPointModel.from_drifts(0.15, 0.09, 0.03, 1.0)
        for alpha in (0.5, -1.0, -3.0):
            gamma = 1.0 / (1.0 - alpha)
            kappa = gamma * 0.6 / 0.15
            got = am.precommit_value(model, alpha, 1.0, 10.0, [kappa])
            want = (1.0 / alpha) * np.exp(0.5 * 0.36 * 10.0 * alpha * gamma)
            assert got == pytest.approx(want, rel=1e-12)

    def test_mc_oracle_unit_fraction(self, benchmark, mc):
        got = am.precommit_value(benchmark, 0.5, 1.0, mc.horizon, [1.0])
        sim = mc.constants[1.0]
        assert abs(sim.mixture_utility - got) <= 3.0 * sim.mixture_utility_se


class TestPrecommitFraction:
    def test_short_horizon_limit(self, benchmark):
        res = am.precommit_fraction(benchmark, -1.0, 1e-4)
        want = 0.5 * 2.0 + 0.5 * (2.0 / 3.0)
        assert abs(res.kappa_pre[0] - want) <= 1e-3

    def test_long_horizon_limit(self, benchmark):
        res = am.precommit_fraction(benchmark, 0.5, 400.0)
        assert abs(res.kappa_pre[0] - 8.0) <= 1e-2

    def test_degenerate_prior(self, benchmark):
        for t_hor in (0.5, 10.0, 100.0):
            res = am.precommit_fraction(benchmark.with_p(1.0), -1.0, t_hor)
            assert res.kappa_pre[0] == pytest.approx(2.0, abs=1e-10)

    def test_foc_self_consistency(self, benchmark):
        for alpha in (0.5, -0.5, -1.0, -3.0):
            for t_hor in (1.0, 10.0, 50.0):
                res = am.precommit_fraction(benchmark, alpha, t_hor)
                assert res.foc_residual <= 1e-10
                gamma = 1.0 / (1.0 - alpha)
                k_hi = gamma * 0.6 / 0.15
                k_lo = gamma * 0.2 / 0.15
                w = precommit_softmax_weight(benchmark, alpha, t_hor, res.kappa_pre)
                rebuilt = w * k_hi + (1.0 - w) * k_lo
                assert abs(rebuilt - res.kappa_pre[0]) <= 1e-10
                assert 0.0 < res.upper_weight_pre < 1.0

    def test_local_maximum(self, benchmark):
        for alpha in (0.5, -1.0):
            res = am.precommit_fraction(benchmark, alpha, 10.0)
            v0 = am.precommit_value(benchmark, alpha, 1.0, 10.0, res.kappa_pre)
            for delta in (1e-3, 1e-2):
                for sign in (1.0, -1.0):
                    v = am.precommit_value(benchmark, alpha, 1.0, 10.0,
                                           res.kappa_pre + sign * delta)
                    assert v0 >= v

    def test_variance_term_cancels_from_softmax(self, benchmark):
        # weights from the drift-only exponents equal weights from the full
        # exponents including the scenario-independent quadratic term
        alpha, t_hor = -1.0, 10.0
        res = am.precommit_fraction(benchmark, alpha, t_hor)
        kappa = float(res.kappa_pre[0])
        sigma2 = 0.15**2
        quad = 0.5 * (1.0 - alpha) * kappa**2 * sigma2
        e_drift = alpha * t_hor * np.array([kappa * 0.09, kappa * 0.03])
        e_full = alpha * t_hor * np.array([kappa * 0.09 - quad, kappa * 0.03 - quad])

        def softmax_hi(e):
            m = e.max()
            w = 0.5 * np.exp(e - m)
            return w[0] / w.sum()

        assert abs(softmax_hi(e_drift) - softmax_hi(e_full)) <= 1e-14

    def test_multi_asset_fixed_point(self):
        model = am.TwoPointModel(sigma=[[0.2, 0.03], [0.0, 0.3]],
                                 theta_hi=[0.5, 0.3], theta_lo=[0.1, 0.2], p=0.6)
        res = am.precommit_fraction(model, -0.5, 12.0)
        assert res.foc_residual <= 1e-10
        v0 = am.precommit_value(model, -0.5, 1.0, 12.0, res.kappa_pre)
        for i in range(2):
            for delta in (1e-3, 1e-2):
                for sign in (1.0, -1.0):
                    bump = res.kappa_pre.copy()
                    bump[i] += sign * delta
                    assert v0 >= am.precommit_value(model, -0.5, 1.0, 12.0, bump)


class TestPrecommitVersusLearning:
    def test_more_aggressive_at_intermediate_horizons(self, benchmark):
        # risk-averse pre-commitment puts less weight on the bad scenario
        alpha = -1.0
        for t_hor in (5.0, 10.0, 20.0):
            res = am.precommit_fraction(benchmark, alpha, t_hor)
            g = am.lower_weight_g(alpha, 0.5, t_hor, [0.2], [0.6])
            assert 1.0 - res.upper_weight_pre <= g

    def test_coincide_in_short_horizon_limit(self, benchmark):
        res = am.precommit_fraction(benchmark, -1.0, 1e-4)
        g = am.lower_weight_g(-1.0, 0.5, 1e-4, [0.2], [0.6])
        assert abs((1.0 - res.upper_weight_pre) - g) <= 1e-3

    def test_coincide_for_near_log_investor(self, benchmark):
        res = am.precommit_fraction(benchmark, 1e-5, 10.0)
        g = am.lower_weight_g(1e-5, 0.5, 10.0, [0.2], [0.6])
        assert abs((1.0 - res.upper_weight_pre) - g) <= 1e-4

    def test_simulated_ordering(self, mc):
        # learning beats pre-commitment within Monte Carlo resolution
        se = np.hypot(mc.learning.mixture_utility_se, mc.precommit.mixture_utility_se)
        assert mc.learning.mixture_utility >= mc.precommit.mixture_utility - 3.0 * se
