"""Tail estimators: importance sampling, naive MC, and the exact lattice DP."""

import math

import numpy as np
import pytest

from reflectedwalk import barrier, estimators, model
from reflectedwalk.errors import InfiniteByCriterion, LatticeMismatch, NonLattice


class TestExactDp:
    def test_free_barrier_small_case_by_hand(self, pm_simple):
        # P(max of plain walk > 2 by step 4) = P(first three steps all +1)
        # (up-moves have probability 1/4 and the walk is skip-free upward)
        est = estimators.tail_dp(pm_simple, barrier.FreeBarrier(), 2.0, 4)
        assert est.point == pytest.approx(0.25**3, abs=1e-15)

    def test_zero_step_probability_zero(self, pm_simple):
        est = estimators.tail_dp(pm_simple, barrier.FreeBarrier(), 2.0, 1)
        assert est.point == 0.0

    def test_monotone_in_horizon(self, pm_simple):
        pts = [estimators.tail_dp(pm_simple, barrier.LinearBarrier(1.0), 3.0, h).point
               for h in (4, 8, 16, 64, 256)]
        assert all(a <= b + 1e-15 for a, b in zip(pts, pts[1:]))

    def test_monotone_decreasing_in_level(self, pm_simple):
        pts = [estimators.tail_dp(pm_simple, barrier.LinearBarrier(1.0), u, 256).point
               for u in (1.0, 2.0, 4.0, 8.0)]
        assert all(a >= b - 1e-15 for a, b in zip(pts, pts[1:]))

    def test_probability_mass_is_conserved(self, pm_second):
        est = estimators.tail_dp(pm_second, barrier.LinearBarrier(1.0), 6.0, 400)
        assert 0.0 <= est.point <= 1.0
        assert est.pruned_mass >= 0.0
        assert est.point + est.pruned_mass <= 1.0 + 1e-12

    def test_off_lattice_level_is_flagged_and_bracketed(self, pm_simple):
        est_half = estimators.tail_dp(pm_simple, barrier.FreeBarrier(), 2.5, 64)
        est_two = estimators.tail_dp(pm_simple, barrier.FreeBarrier(), 2.0, 64)
        est_three = estimators.tail_dp(pm_simple, barrier.FreeBarrier(), 3.0, 64)
        assert est_half.u_quantized
        assert not est_two.u_quantized
        # exceeding 2.5 on a unit lattice is the same event as exceeding 2.0+
        assert est_three.point <= est_half.point <= est_two.point

    def test_gaussian_rejected(self, pm_gauss):
        with pytest.raises(NonLattice):
            estimators.tail_dp(pm_gauss, barrier.FreeBarrier(), 2.0, 10)

    def test_converged_matches_long_fixed_horizon(self, pm_simple):
        conv = estimators.tail_dp_converged(pm_simple, barrier.LinearBarrier(1.0), 5.0)
        fixed = estimators.tail_dp(pm_simple, barrier.LinearBarrier(1.0), 5.0, 20_000)
        assert conv.point == pytest.approx(fixed.point, abs=1e-11)

    def test_converged_free_barrier_ruin_closed_form(self, pm_simple):
        # plain negative-drift walk: P(max > u) = 3^{-(u+1)} for integer u
        for u in (1, 3, 6):
            est = estimators.tail_dp_converged(pm_simple, barrier.FreeBarrier(), float(u))
            assert est.point == pytest.approx(3.0 ** (-(u + 1)), rel=1e-10)


class TestImportanceSampling:
    def test_zero_variance_anchor(self, pm_simple, tm_simple):
        est = estimators.tail_is(pm_simple, barrier.FreeBarrier(), 5.0,
                                 tm_simple, 100, seed=0)
        assert est.point == 3.0 ** (-6)
        assert est.stderr == 0.0

    def test_per_sample_weight_bounded_by_level(self, pm_second, tm_second):
        # every weight is exp(-theta* s_tau) <= exp(-theta* u): the point
        # estimate of the exceedance probability obeys the same bound
        u = 7.0
        est = estimators.tail_is(pm_second, barrier.LinearBarrier(1.0), u,
                                 tm_second, 5_000, seed=3)
        assert est.point <= math.exp(-tm_second.theta_star * u) + 1e-15

    def test_agreement_with_exact_dp(self, pm_second, tm_second):
        u = 6.0
        mc = estimators.tail_is(pm_second, barrier.LinearBarrier(1.0), u,
                                tm_second, 200_000, seed=4)
        dp = estimators.tail_dp_converged(pm_second, barrier.LinearBarrier(1.0), u)
        assert abs(mc.point - dp.point) <= 4.0 * mc.stderr

    def test_gaussian_supported(self, pm_gauss, tm_gauss):
        est = estimators.tail_is(pm_gauss, barrier.FreeBarrier(), 3.0,
                                 tm_gauss, 20_000, seed=5)
        # plain Gaussian walk: Lundberg bound P(max > u) <= e^{-u}
        assert 0.0 < est.point < math.exp(-3.0)

    def test_refuses_infinite_verdict(self, pm_simple, tm_simple):
        with pytest.raises(InfiniteByCriterion):
            estimators.tail_is(pm_simple, barrier.ZeroBarrier(), 5.0,
                               tm_simple, 100, seed=0)

    def test_worker_count_does_not_change_result(self, pm_second, tm_second):
        kw = dict(u=8.0, tilted=tm_second, n_samples=40_000, seed=11)
        one = estimators.tail_is(pm_second, barrier.LinearBarrier(1.0), **kw, workers=1)
        four = estimators.tail_is(pm_second, barrier.LinearBarrier(1.0), **kw, workers=4)
        assert one.point == four.point
        assert one.stderr == four.stderr


class TestNaive:
    def test_matches_dp_at_same_horizon(self, pm_simple):
        horizon = 60
        dp = estimators.tail_dp(pm_simple, barrier.LinearBarrier(1.0), 3.0, horizon)
        mc = estimators.tail_naive(pm_simple, barrier.LinearBarrier(1.0), 3.0,
                                   horizon, 100_000, seed=6)
        # binomial sampling error around the exact finite-horizon value
        assert abs(mc.point - dp.point) <= 4.0 * max(mc.stderr, 1e-6)

    def test_deterministic_given_seed(self, pm_simple):
        a = estimators.tail_naive(pm_simple, barrier.ZeroBarrier(), 4.0, 50,
                                  10_000, seed=7)
        b = estimators.tail_naive(pm_simple, barrier.ZeroBarrier(), 4.0, 50,
                                  10_000, seed=7)
        assert a.point == b.point


class TestRecordDistribution:
    def test_degenerate_when_barrier_outruns_walk(self, tm_simple):
        # tilted unit walk vs slope-1 barrier: the gap g(n) - S_n never
        # returns to 0, so the record stays at its starting value
        dd = estimators.d_distribution_dp(tm_simple, barrier.LinearBarrier(1.0))
        assert dd.probs == pytest.approx({0.0: 1.0}, abs=1e-12)
        assert dd.c_d == pytest.approx(1.0, abs=1e-12)

    def test_mass_sums_to_one(self, tm_second):
        dd = estimators.d_distribution_dp(tm_second, barrier.LinearBarrier(1.0))
        assert sum(dd.probs.values()) == pytest.approx(1.0, abs=1e-10)
        assert all(v >= 0.0 for v in dd.probs.values())

    def test_transform_value_exceeds_one(self, tm_second):
        # c_d = E[exp(theta* D)] >= 1 with equality iff D is identically 0
        dd = estimators.d_distribution_dp(tm_second, barrier.LinearBarrier(1.0))
        assert dd.c_d > 1.0
        assert dd.truncation_bound < 1e-9

    def test_free_barrier_record_is_zero(self, tm_second):
        dd = estimators.d_distribution_dp(tm_second, barrier.FreeBarrier())
        assert dd.probs == pytest.approx({0.0: 1.0})
        assert dd.c_d == pytest.approx(1.0)

    def test_off_lattice_barrier_rejected(self, tm_simple):
        with pytest.raises(LatticeMismatch):
            estimators.d_distribution_dp(tm_simple, barrier.LinearBarrier(0.5))

    def test_infinite_verdict_rejected(self, tm_simple):
        with pytest.raises(InfiniteByCriterion):
            estimators.d_distribution_dp(tm_simple, barrier.ZeroBarrier())
