from __future__ import annotations

import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crcscreen import preferences as pref

TRANSCRIPT = Path(__file__).resolve().parents[1] / "src" / "crcscreen" / "data" / "appendix_b_transcript.json"


class TestValueFunction:
    def test_origin_is_zero(self):
        assert pref.value(0.0, 0.0, 4) == 0.0

    def test_fit_like_point(self):
        # 6.80 * 0.245 - log10(15.34)
        got = pref.value(14.34, 0.245, 3)
        assert got == pytest.approx(6.80 * 0.245 - math.log10(15.34), abs=1e-12)
        assert got == pytest.approx(0.4802, abs=5e-4)

    def test_colonoscopy_like_point(self):
        got = pref.value(1000.0, 0.532, 1)
        assert got == pytest.approx(4.01 * 0.532 - math.log10(1001.0), abs=1e-12)
        assert got == pytest.approx(-0.8671, abs=5e-4)

    def test_total_cost(self):
        assert pref.total_cost(14.34, 0.0) == 14.34
        assert pref.total_cost(1000.0, 2810.0) == 3810.0
        assert pref.total_cost(0.0, 0.0) == 0.0
        with pytest.raises(ValueError):
            pref.total_cost(-1.0, 0.0)


class TestElicitPair:
    def test_comfort2_pair(self):
        # CTC vs CC at the interview's coordinate precision
        got = pref.elicit_lambda_pair(0.1590, 95.41, 0.2246, 510.24, 180)
        assert got == pytest.approx(4.17, abs=0.01)

    def test_comfort3_first_pair(self):
        got = pref.elicit_lambda_pair(0.245, 14.34, 0.129, 12.14, 3)
        assert got == pytest.approx(5.04, abs=0.01)

    def test_comfort1_synthetic_pair(self):
        got = pref.elicit_lambda_pair(0.530, 1000, 0.4, None, 300)
        assert got == pytest.approx(4.01, abs=0.01)

    def test_equal_information_rejected(self):
        with pytest.raises(pref.ElicitationError):
            pref.elicit_lambda_pair(0.2, 10, 0.2, 20, 5)

    def test_indifference_above_stated_cost_rejected(self):
        with pytest.raises(pref.ElicitationError):
            pref.elicit_lambda_pair(0.3, 100, 0.2, 50, 60)

    @settings(max_examples=100)
    @given(info_a=st.floats(0.05, 0.9), diff=st.floats(0.01, 0.5),
           cost_a=st.floats(0, 2000), indiff=st.floats(0, 500))
    def test_inverse_of_indifference_identity(self, info_a, diff, cost_a, indiff):
        info_b = info_a - diff
        lam = pref.elicit_lambda_pair(info_a, cost_a, info_b, None, indiff)
        lhs = lam * info_a - math.log10(cost_a + 1)
        rhs = lam * info_b - math.log10(indiff + 1)
        assert lhs == pytest.approx(rhs, abs=1e-9)


class TestRobustify:
    def test_comfort3_median(self):
        ests = [5.04, 10.57, 16.28, 6.40, 7.2, 6.17]
        assert pref.robustify_lambda(ests) == pytest.approx(6.80, abs=1e-12)

    def test_single_estimate(self):
        assert pref.robustify_lambda([4.17]) == 4.17

    def test_even_count_midpoint(self):
        assert pref.robustify_lambda([1, 2, 3, 4]) == 2.5

    @given(st.lists(st.floats(0.1, 100), min_size=1, max_size=9),
           st.randoms(use_true_random=False))
    def test_permutation_invariant_and_bounded(self, ests, rng):
        shuffled = list(ests)
        rng.shuffle(shuffled)
        got = pref.robustify_lambda(shuffled)
        assert got == pref.robustify_lambda(ests)
        assert min(ests) <= got <= max(ests)

    def test_empty_rejected(self):
        with pytest.raises(pref.ElicitationError):
            pref.robustify_lambda([])


class TestCalibration:
    def test_published_parameters(self):
        # exact solution of the stated three-equation system; the published
        # triple is this solution rounded to three decimals
        a, b, rho = pref.calibrate_utility()
        assert a == pytest.approx(1.015, abs=0.0025)
        assert b == pytest.approx(0.872, abs=0.0025)
        assert rho == pytest.approx(0.039, abs=0.002)

    def test_anchor_constraints_hold(self, params):
        u_worst = params.utility(*params.worst_anchor, 3)
        u_best = params.utility(*params.best_anchor, 3)
        u_pe = params.utility(*params.pe_point, 3)
        assert u_worst == pytest.approx(0.0, abs=1e-6)
        assert u_best == pytest.approx(1.0, abs=1e-6)
        assert u_pe == pytest.approx(0.7, abs=1e-6)

    def test_residuals_below_1e6(self, params):
        a, b, rho = params.a, params.b, params.rho
        for (cost, info), target in [(params.worst_anchor, 0.0),
                                     (params.best_anchor, 1.0),
                                     (params.pe_point, 0.7)]:
            v = pref.value(cost, info, 3, params.lambdas)
            assert abs(a - b * math.exp(-rho * v) - target) < 1e-6

    def test_linear_pe_flags_risk_neutrality(self):
        v_best = pref.value(0.0, 15.75, 3)
        v_worst = pref.value(8131.71, 0.0, 3)
        v_pe = pref.value(50.0, 4.1, 3)
        linear = (v_pe - v_worst) / (v_best - v_worst)
        with pytest.warns(UserWarning, match="risk-neutral"):
            a, b, rho = pref.calibrate_utility(pe_value=linear)
        assert rho == 0.0
        # the linear limit still anchors the scale
        assert a + b * v_worst == pytest.approx(0.0, abs=1e-9)
        assert a + b * v_best == pytest.approx(1.0, abs=1e-9)

    def test_below_linear_pe_fails_with_diagnostics(self):
        with pytest.raises(pref.CalibrationError, match="risk-neutral point"):
            pref.calibrate_utility(pe_value=0.1)

    def test_bad_pe_value_rejected(self):
        with pytest.raises(pref.CalibrationError):
            pref.calibrate_utility(pe_value=1.5)

    def test_risk_seeking_adjacent_override(self, params):
        # lowering rho while keeping the calibrated scale is the documented
        # way to explore risk attitude
        override = params.with_rho(0.005)
        assert override.rho == 0.005
        assert (override.a, override.b) == (params.a, params.b)


class TestUtilityShape:
    def test_monotone_by_finite_differences(self, params):
        h = 1e-4
        for cost in (0.0, 10.0, 250.0, 2000.0):
            for info in (0.0, 0.3, 2.0, 10.0):
                for comfort in (1, 2, 3, 4):
                    u = params.utility(cost, info, comfort)
                    assert params.utility(cost, info + h, comfort) > u
                    assert params.utility(cost + h, info, comfort) < u

    def test_bounded_on_anchor_interval(self, params):
        assert 0.0 <= params.utility(50.0, 4.1, 3) <= 1.0 + 1e-9

    def test_certainty_equivalent_rises_as_rho_falls(self, params):
        # 50/50 lottery over two values; CE = u^-1(EU)
        def ce(p: pref.PreferenceParams, v_lo: float, v_hi: float) -> float:
            eu = 0.5 * (p.a - p.b * math.exp(-p.rho * v_lo)) \
                + 0.5 * (p.a - p.b * math.exp(-p.rho * v_hi))
            return -math.log((p.a - eu) / p.b) / p.rho

        lotteries = [(-2.0, 10.0), (0.0, 50.0), (1.0, 3.0), (-3.5, 90.0)]
        less_averse = params.with_rho(params.rho / 4)
        for v_lo, v_hi in lotteries:
            assert ce(less_averse, v_lo, v_hi) > ce(params, v_lo, v_hi)

    def test_monotonicity_warning_not_error(self):
        bad = {1: 5.0, 2: 4.0, 3: 6.8, 4: 7.0}
        with pytest.warns(UserWarning, match="not monotone"):
            ok = pref.check_lambda_monotonicity(bad)
        assert ok is False


class TestTranscriptReplay:
    def test_appendix_interview(self):
        lambdas, params, estimates = pref.replay_transcript(TRANSCRIPT)
        assert lambdas[1] == pytest.approx(4.01, abs=0.02)
        assert lambdas[2] == pytest.approx(4.17, abs=0.02)
        assert lambdas[3] == pytest.approx(6.80, abs=0.02)
        assert lambdas[4] == 7.0
        for got, want in zip(estimates[3], [5.04, 10.57, 16.28, 6.40, 7.2, 6.17]):
            assert got == pytest.approx(want, abs=0.02)
        assert params is not None
        assert params.rho == pytest.approx(0.039, abs=0.002)

    def test_lambda4_configurable(self):
        lambdas, _, _ = pref.replay_transcript(TRANSCRIPT, lambda4=8.5)
        assert lambdas[4] == 8.5
