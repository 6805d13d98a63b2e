import math
import warnings

import numpy as np
import pytest

from weightlab.config import AnalysisSettings
from weightlab.counterexamples import build_example
from weightlab.criteria import (
    check_disc_d_conditions, check_disc_i_conditions, check_epimorphism_disc, check_epimorphism_plane,
    check_hl_condition, check_integral_condition, check_integral_sufficiency_derivative, check_log_domination,
    check_necessary_derivative_bound, check_plane_d_conditions, check_plane_derivative_growth_bound,
    check_plane_i_conditions, check_regularity, classify_weight, estimate_tail, implied_norm_floor,
)
from weightlab.models import (
    DISC, ConditionReport, ConditionVerdict, Confidence, DomainMismatch, EstimateKind, InvalidForDomain, Trend,
    TooFewLevels, WeightClass,
)
from weightlab.weights import make_builtin, over_one_minus_r


def _by_id(reports):
    return {r.condition_id: r for r in reports}


class TestEstimateTail:
    LEVELS = np.repeat(np.arange(10), 4)

    def test_constant_tail_converges(self):
        est = estimate_tail(np.full(self.LEVELS.size, 3.0), self.LEVELS, EstimateKind.LIMSUP)
        assert est.trend is Trend.CONVERGES_TO
        assert est.limit == pytest.approx(3.0)
        assert est.is_bounded()
        assert len(est.windows) == 5

    def test_doubling_tail_diverges(self):
        est = estimate_tail(2.0 ** self.LEVELS, self.LEVELS, EstimateKind.LIMSUP)
        assert est.trend is Trend.DIVERGES_TO_INFINITY
        assert est.is_unbounded()
        assert est.value == math.inf

    def test_halving_tail_decays(self):
        est = estimate_tail(2.0 ** -self.LEVELS.astype(float), self.LEVELS, EstimateKind.LIMINF)
        assert est.trend is Trend.DECAYS_TO_ZERO
        assert est.value == 0.0

    def test_alternating_tail_is_unstable(self):
        est = estimate_tail((self.LEVELS % 2).astype(float), self.LEVELS, EstimateKind.LIMSUP)
        assert est.trend is Trend.OSCILLATING
        assert est.confidence is Confidence.UNSTABLE
        assert math.isnan(est.value)

    def test_limit_needs_both_sides_to_agree(self):
        values = np.tile([1.0, 2.0], 20)
        levels = np.repeat(np.arange(10), 4)
        est = estimate_tail(values, levels, EstimateKind.LIMIT)
        assert est.trend is Trend.OSCILLATING
        assert est.confidence is Confidence.STABLE
        same = estimate_tail(np.full(40, 2.0), levels, EstimateKind.LIMIT)
        assert same.trend is Trend.CONVERGES_TO

    def test_too_few_levels(self):
        levels = np.repeat(np.arange(3), 4)
        with pytest.raises(TooFewLevels):
            estimate_tail(np.ones(levels.size), levels, EstimateKind.LIMSUP)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            estimate_tail(np.ones(5), np.arange(4), EstimateKind.LIMSUP)

    def test_late_jump_after_stalling_is_not_divergence(self):
        values = np.repeat([1.0, 2.0, 4.0, 7.0, 9.0, 10.0, 11.0, 11.1, 11.2, 11.8], 4)
        est = estimate_tail(values, self.LEVELS, EstimateKind.LIMSUP)
        assert est.trend is Trend.OSCILLATING
        assert not est.is_unbounded()

    def test_logarithmic_growth_still_diverges(self):
        est = estimate_tail(np.log(self.LEVELS + 2.0), self.LEVELS, EstimateKind.LIMSUP)
        assert est.trend is Trend.DIVERGES_TO_INFINITY

    def test_saturating_tail_is_not_divergence(self):
        est = estimate_tail(1.0 - 0.7 ** self.LEVELS, self.LEVELS, EstimateKind.LIMSUP)
        assert est.trend is not Trend.DIVERGES_TO_INFINITY

    def test_unstable_estimate_forces_inconclusive(self):
        est = estimate_tail((self.LEVELS % 2).astype(float), self.LEVELS, EstimateKind.LIMSUP)
        report = ConditionReport("demo", ConditionVerdict.HOLDS, "", estimate=est)
        assert report.verdict is ConditionVerdict.INCONCLUSIVE


class TestDiscConditions:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 5.0])
    def test_power_weight_d_battery(self, power_disc, settings, alpha):
        reports = _by_id(check_disc_d_conditions(power_disc(alpha), settings))
        assert list(reports) == [f"disc_d.{k}" for k in ("i", "ii", "iii", "iv", "v", "vi")]
        assert all(r.holds for r in reports.values())
        assert reports["disc_d.i"].value == pytest.approx(alpha, rel=1e-9)
        assert reports["disc_d.iv"].value == pytest.approx(2.0 ** alpha, rel=1e-6)
        assert reports["disc_d.iv"].parameters['sup_ratio'] == pytest.approx(2.0 ** alpha, rel=1e-6)
        assert reports["disc_d.vi"].value == pytest.approx(2.0 ** alpha, rel=1e-3)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 5.0])
    def test_power_weight_i_battery(self, power_disc, settings, alpha):
        reports = _by_id(check_disc_i_conditions(power_disc(alpha), settings))
        assert len(reports) == 7
        assert all(r.holds for r in reports.values())
        assert reports["disc_i.vi"].parameters['gamma'] == 2.0
        assert reports["disc_i.vi"].value == pytest.approx(2.0 ** -alpha, abs=1e-4)
        assert reports["disc_i.vii"].value == pytest.approx(1.0 / alpha, abs=1e-3)

    def test_exponential_weight_fails_first_condition(self, settings):
        v = make_builtin('exp_inv_disc', [1.0, 1.0], DISC)
        reports = _by_id(check_disc_d_conditions(v, settings))
        assert reports["disc_d.i"].fails
        assert reports["disc_d.iv"].fails

    def test_exponential_weight_saturates_dyadic_ratio(self, settings):
        v = make_builtin('exp_inv_disc', [1.0, 1.0], DISC)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            reports = _by_id(check_disc_d_conditions(v, settings))
        assert not [w for w in caught if "overflow" in str(w.message)]
        assert reports["disc_d.iv"].parameters['sup_ratio'] == math.inf
        assert reports["disc_d.iv"].value == math.inf

    def test_log_weight(self, settings):
        v = make_builtin('log_power_disc', [1.0], DISC)
        d = _by_id(check_disc_d_conditions(v, settings))
        assert d["disc_d.i"].holds
        assert d["disc_d.i"].estimate.trend is Trend.DECAYS_TO_ZERO
        assert _by_id(check_disc_i_conditions(v, settings))["disc_i.i"].fails
        assert check_log_domination(v, settings).fails
        regular = check_regularity(v, settings)
        assert regular.holds and regular.value == 0.0

    def test_shallow_grid_is_inconclusive(self, power_disc):
        shallow = AnalysisSettings(grid_depth=3)
        reports = check_disc_d_conditions(power_disc(1), shallow)
        assert len(reports) == 6
        assert all(r.verdict is ConditionVerdict.INCONCLUSIVE for r in reports)

    def test_disc_checks_reject_plane_weights(self, exp_plane, settings):
        with pytest.raises(InvalidForDomain):
            check_disc_d_conditions(exp_plane(1), settings)
        with pytest.raises(InvalidForDomain):
            check_log_domination(exp_plane(1), settings)

    def test_epimorphism_disc(self, power_disc, settings):
        assert check_epimorphism_disc(power_disc(1), settings).holds
        assert check_epimorphism_disc(make_builtin('log_power_disc', [1.0], DISC), settings).fails
        assert check_epimorphism_disc(make_builtin('exp_inv_disc', [1.0, 1.0], DISC), settings).fails

    def test_integral_derivative_domination(self, power_disc, settings):
        v = power_disc(2)
        report = check_integral_sufficiency_derivative(over_one_minus_r(v), v, settings)
        assert report.holds
        assert report.value == pytest.approx(0.5, rel=1e-6)

    def test_necessary_bound_on_power_weight(self, power_disc, settings):
        v = power_disc(3)
        report = check_necessary_derivative_bound(v, over_one_minus_r(v), settings)
        assert report.holds
        assert report.value == pytest.approx(3.0, rel=1e-6)

    def test_iterated_integral_floor(self, settings):
        report = implied_norm_floor(make_builtin('exp_inv_disc', [1.0, 1.0], DISC), settings)
        assert report.holds
        assert report.parameters['C'] == 1.0

    def test_integral_condition_domain_mismatch(self, power_disc, exp_plane, settings):
        with pytest.raises(DomainMismatch):
            check_integral_condition(power_disc(1), exp_plane(1), settings)


class TestPlaneConditions:
    def test_exponential_d_conditions(self, exp_plane, settings):
        derivative, growth = check_plane_d_conditions(exp_plane(1), settings)
        assert (derivative.condition_id, growth.condition_id) == ("plane_d.derivative", "plane_d.growth")
        assert derivative.holds and growth.holds
        assert derivative.value == pytest.approx(1.0, rel=1e-9)
        assert growth.value == pytest.approx(1.0, rel=1e-9)

    def test_exponential_i_conditions(self, exp_plane, settings):
        derivative, integral = check_plane_i_conditions(exp_plane(1), settings)
        assert derivative.holds
        assert integral.condition_id == "plane_i.integral"
        assert integral.holds
        assert integral.value == pytest.approx(1.0, abs=1e-3)
        xs, ratio = integral.trace
        mid = np.argmin(np.abs(xs - 1.0))
        assert ratio[mid] == pytest.approx(1.0 - math.exp(-math.exp(xs[mid])), rel=1e-6)

    @pytest.mark.parametrize("p, d_holds, i_holds", [(0.5, True, False), (1.0, True, True), (2.0, False, True)])
    def test_growth_order_decides(self, exp_plane, settings, p, d_holds, i_holds):
        v = exp_plane(p)
        growth = check_plane_d_conditions(v, settings)[1]
        first_i = check_plane_i_conditions(v, settings)[0]
        assert growth.holds is d_holds
        assert first_i.holds is i_holds

    def test_sandwich(self, exp_plane, settings):
        report = check_epimorphism_plane(exp_plane(1), settings)
        assert report.holds
        assert report.parameters['C'] == 1.0
        assert check_epimorphism_plane(exp_plane(2), settings).fails

    def test_growth_bound(self, exp_plane, settings):
        report = check_plane_derivative_growth_bound(exp_plane(1), settings)
        assert report.holds
        assert report.parameters['derivative'] == pytest.approx(1.0, rel=1e-6)


class TestClassify:
    def test_power_disc_classes(self, power_disc, settings):
        tags = classify_weight(power_disc(2), settings)
        for flag in (WeightClass.LOG_CONVEX, WeightClass.MODERATE_GROWTH, WeightClass.H_WEIGHT, WeightClass.REGULAR):
            assert tags.has(flag)
        assert not tags.has(WeightClass.RAPIDLY_GROWING)
        assert tags.regular_limit == pytest.approx(2.0, rel=1e-9)
        assert tags.evidence["ModerateGrowth"].condition_id == "disc_d.iv"

    def test_rapidly_growing_disc(self, settings):
        tags = classify_weight(make_builtin('rapid_disc', [2.0], DISC), settings)
        assert tags.has(WeightClass.RAPIDLY_GROWING)
        assert not tags.has(WeightClass.MODERATE_GROWTH)
        assert tags.has(WeightClass.H_WEIGHT)

    def test_exp_plane_classes(self, exp_plane, settings):
        tags = classify_weight(exp_plane(1), settings)
        assert tags.has(WeightClass.LOG_CONVEX)
        assert tags.has(WeightClass.CK_WEIGHT)
        assert tags.evidence["CKWeight"].parameters['c'] == 2.0
        assert tags.has(WeightClass.HL_CONDITION)
        assert tags.regular_limit is None
        assert "Regular" not in tags.names()

    def test_hl_needs_several_n(self, exp_plane, settings):
        report = check_hl_condition(exp_plane(1), n_grid=[3.0], settings=settings)
        assert report.verdict is ConditionVerdict.INCONCLUSIVE

    def test_hl_holds_for_power_weight(self, power_disc, settings):
        report = check_hl_condition(power_disc(1), settings=settings)
        assert report.holds
        assert report.parameters['longest_gap'] <= 1.0

    def test_hl_fails_across_non_convex_kinks(self, settings):
        v = build_example('ex1', settings=settings).v
        report = check_hl_condition(v, settings=settings)
        assert report.fails
        assert report.parameters['longest_gap'] >= 3.0
