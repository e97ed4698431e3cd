"""Tests for the leave-p-out risk machinery and the window-selection estimator.

Covered here:
- the closed-form risk on hand-checkable samples, its exact -1 value on the
  one-cell partition, and its large-sample value on uniform data,
- the exact MSE of the risk under the multinomial law: frozen reference
  values, the identically-zero one-cell case, and input validation,
- holdout-size selection: the fast vertex-based argmin against the
  exhaustive sweep (property-based), and tie resolution to the smallest p,
- the full selector: recovery of the flat region on model data, behavior at
  the theta = 1 boundary, the three-stage tie-break (widest window, then
  coarsest grid, then leftmost), closed-window counting at the edges, and
  the p_mode switch.

Frozen floats below were computed once with this package at higher
verbosity and cross-checked (Monte Carlo for the MSE values, direct
enumeration for the selector ties) before being pinned.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pi0lab.crossval import (
    _argmin_p,
    analytic_mse,
    lpo_risk,
    select_p,
    theta_hat_cr,
)
from pi0lab.model import PValueSample, sample
from pi0lab.partitions import (
    HistogramCounts,
    cell_counts,
    moments_from_probs,
    regular,
)


def uniform_sample(n, seed=0):
    return PValueSample(np.random.default_rng(seed).random(n))


class TestLpoRisk:
    def test_two_point_hand_value(self):
        # halves, counts (1, 1), p = 1: [(2n-p) S1 - n(n-p+1) S2] / ((n-1)(n-p))
        # = [3*2 - 2*2*1] / 1 = 2
        pv = PValueSample(np.array([0.25, 0.75]))
        assert lpo_risk(cell_counts(pv, regular(2)), regular(2), 1) == 2.0

    def test_trivial_partition_is_exactly_minus_one(self, rng):
        part = regular(1)
        for n in (2, 7, 100):
            pv = PValueSample(rng.random(n))
            counts = cell_counts(pv, part)
            assert lpo_risk(counts, part, 1) == -1.0
            assert lpo_risk(counts, part, n - 1) == -1.0

    @given(st.integers(0, 2**32 - 1), st.integers(2, 500), st.integers(1, 499))
    @settings(max_examples=40, deadline=None)
    def test_trivial_partition_any_p(self, seed, n, p):
        # S1 = S2 = 1 identically, so the numerator is -(n-1)(n-p) exactly
        pv = PValueSample(np.random.default_rng(seed).random(n))
        if p > n - 1:
            p = n - 1
        assert lpo_risk(cell_counts(pv, regular(1)), regular(1), p) == -1.0

    def test_uniform_large_sample(self):
        # target for the uniform density is -1 + O(1/n) on any partition
        pv = uniform_sample(10000)
        r = lpo_risk(cell_counts(pv, regular(2)), regular(2), 1)
        assert r == pytest.approx(-0.9998039707961194, rel=1e-12)
        assert abs(r + 1.0) < 0.05

    def test_p_range_checked(self):
        pv = PValueSample(np.array([0.25, 0.75]))
        counts = cell_counts(pv, regular(2))
        for bad_p in (0, 2, -1):
            with pytest.raises(ValueError):
                lpo_risk(counts, regular(2), bad_p)

    def test_needs_two_observations(self):
        counts = HistogramCounts(np.array([1]))
        with pytest.raises(ValueError):
            lpo_risk(counts, regular(1), 1)


class TestAnalyticMse:
    def test_frozen_reference_values(self):
        halves = regular(2)
        ms = moments_from_probs(halves, [0.5, 0.5])
        assert analytic_mse(1, halves, ms, 50) == pytest.approx(
            0.0008501525724826653, rel=1e-12)
        ms = moments_from_probs(halves, [0.3, 0.7])
        assert analytic_mse(10, halves, ms, 40) == pytest.approx(
            0.015365861538460868, rel=1e-12)

    def test_trivial_partition_mse_is_zero(self):
        # the risk is the constant -1 there, so its MSE vanishes identically
        part = regular(1)
        ms = moments_from_probs(part, [1.0])
        for n, p in ((30, 5), (2, 1), (1000, 999)):
            assert analytic_mse(p, part, ms, n) == 0.0

    def test_never_negative(self, rng):
        part = regular(4)
        for _ in range(30):
            ms = moments_from_probs(part, rng.dirichlet(np.ones(4)))
            n = int(rng.integers(2, 200))
            p = int(rng.integers(1, n))
            assert analytic_mse(p, part, ms, n) >= 0.0

    def test_validation(self):
        part = regular(2)
        ms = moments_from_probs(part, [0.5, 0.5])
        with pytest.raises(ValueError):
            analytic_mse(0, part, ms, 50)
        with pytest.raises(ValueError):
            analytic_mse(50, part, ms, 50)
        with pytest.raises(ValueError):
            analytic_mse(1, part, ms, 1)
        with pytest.raises(ValueError, match="match"):
            analytic_mse(1, regular(3), ms, 50)


class TestSelectP:
    def test_uniform_picks_smallest_holdout(self):
        pv = uniform_sample(100)
        assert select_p(cell_counts(pv, regular(2)), regular(2)) == 1

    def test_trivial_partition_ties_to_one(self):
        # MSE is identically zero, so every p ties and the smallest wins
        pv = uniform_sample(100)
        assert select_p(cell_counts(pv, regular(1)), regular(1)) == 1

    @given(st.integers(0, 2**32 - 1), st.integers(2, 150), st.integers(1, 4))
    @settings(max_examples=60, deadline=None)
    def test_fast_argmin_matches_exhaustive(self, seed, n, d):
        rng = np.random.default_rng(seed)
        part = regular(d)
        counts = rng.multinomial(n, rng.dirichlet(np.ones(d)))
        ms = moments_from_probs(part, counts / n)
        assert _argmin_p(ms, n) == select_p(HistogramCounts(counts), part)

    def test_needs_two_observations(self):
        with pytest.raises(ValueError):
            select_p(HistogramCounts(np.array([1, 0])), regular(2))


class TestThetaHatCr:
    def test_recovers_flat_region_on_model_data(self, a1):
        # the alternative vanishes on [0.7, 1]; with resolutions up to 16 the
        # selector should pick a window inside it, here [0.625, 1]
        res = theta_hat_cr(sample(10000, a1, seed=1), m_min=2, m_max=4)
        assert res.method == "cr"
        assert (res.trace["lambda_hat"], res.trace["mu_hat"]) == (0.625, 1.0)
        assert res.theta_hat == pytest.approx(0.5893333333333334, rel=1e-12)
        assert abs(res.theta_hat - a1.theta) < 0.05

    def test_uniform_boundary_not_clamped(self):
        # at theta = 1 the raw estimate hovers just above 1 and is reported
        # as is; clamping is left to the caller
        res = theta_hat_cr(uniform_sample(100000))
        assert res.theta_hat == pytest.approx(1.0028533333333334, rel=1e-12)
        assert res.theta_hat > 1.0

    def test_uniform_risk_near_minus_one(self):
        res = theta_hat_cr(uniform_sample(10000))
        assert abs(res.trace["r_hat"] + 1.0) < 0.05

    def test_width_tie_prefers_widest(self):
        # three windows tie at risk exactly -4; [0.25, 1] is the widest
        pv = PValueSample(np.array([0.0625, 0.0625, 0.1875, 0.1875]))
        res = theta_hat_cr(pv, m_min=2, m_max=2)
        sel = res.trace["selector"]
        tied = [r.partition.cr_params for r in sel.records
                if r.r_hat == sel.r_hat]
        assert sel.r_hat == -4.0
        assert tied == [(4, 0.25, 0.75), (4, 0.25, 1.0), (4, 0.5, 1.0)]
        assert (res.trace["lambda_hat"], res.trace["mu_hat"]) == (0.25, 1.0)
        assert res.theta_hat == 0.0

    def test_resolution_tie_prefers_coarsest(self):
        # the same window [0, 0.5] at M = 4 and M = 8 carries identical cell
        # masses, so the risks tie bitwise; the coarser grid wins
        pv = PValueSample(np.array([0.1, 0.2, 0.3, 0.4]))
        res = theta_hat_cr(pv, m_min=2, m_max=3)
        sel = res.trace["selector"]
        tied = [r.partition.cr_params for r in sel.records
                if r.r_hat == sel.r_hat]
        assert sel.r_hat == -2.0
        assert (4, 0.0, 0.5) in tied and (8, 0.0, 0.5) in tied
        assert res.trace["m_hat"] == 4
        assert res.theta_hat == 2.0

    def test_position_tie_prefers_leftmost(self):
        # mass split 18:6 across the two central M = 8 cells; the windows
        # avoiding all mass tie, and among the widest pair the left one wins
        vals = np.concatenate((np.linspace(0.38, 0.49, 18),
                               np.linspace(0.51, 0.62, 6)))
        res = theta_hat_cr(PValueSample(vals), m_min=3, m_max=3)
        sel = res.trace["selector"]
        tied = [(r.partition.cr_params[1], r.partition.cr_params[2])
                for r in sel.records if r.r_hat == sel.r_hat]
        assert (0.0, 0.375) in tied and (0.625, 1.0) in tied
        assert (res.trace["lambda_hat"], res.trace["mu_hat"]) == (0.0, 0.375)

    def test_window_count_is_closed_at_edges(self):
        # chosen window is [0.25, 1]; the value sitting exactly on 0.25 is
        # included, so theta_hat = 4 / (4 * 0.75)
        pv = PValueSample(np.array([0.25, 0.3, 0.9, 0.95]))
        res = theta_hat_cr(pv, m_min=2, m_max=2, right_anchored=True)
        assert (res.trace["lambda_hat"], res.trace["mu_hat"]) == (0.25, 1.0)
        assert res.theta_hat == pytest.approx(4.0 / 3.0, rel=1e-15)

    def test_right_anchored_windows_end_at_one(self):
        res = theta_hat_cr(uniform_sample(500), m_min=2, m_max=3,
                           right_anchored=True)
        sel = res.trace["selector"]
        assert all(r.partition.cr_params[2] == 1.0 for r in sel.records)
        assert len(sel.records) == 2 + 6

    def test_fixed_p_mode(self):
        pv = uniform_sample(200)
        res = theta_hat_cr(pv, m_min=2, m_max=2, p_mode="fixed")
        sel = res.trace["selector"]
        assert all(r.p == 20 for r in sel.records)   # n // 10

    def test_explicit_p(self):
        pv = uniform_sample(50)
        res = theta_hat_cr(pv, m_min=2, m_max=2, p_mode=7)
        assert res.trace["p_hat"] == 7

    def test_explicit_p_out_of_range(self):
        with pytest.raises(ValueError):
            theta_hat_cr(uniform_sample(50), m_min=2, m_max=2, p_mode=50)

    def test_condition_flags_recorded_not_filtered(self):
        res = theta_hat_cr(uniform_sample(300), m_min=2, m_max=2)
        sel = res.trace["selector"]
        assert len(sel.condition_ok) == len(sel.records) == 6
        assert all(isinstance(flag, bool) for flag in sel.condition_ok)

    def test_needs_two_observations(self):
        with pytest.raises(ValueError):
            theta_hat_cr(PValueSample(np.array([0.5])))

    def test_empty_collection_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            theta_hat_cr(uniform_sample(10), m_min=1, m_max=1,
                         right_anchored=True)
