import math

import numpy as np
import pytest
from scipy.special import gammaln

from weightlab.config import AnalysisSettings
from weightlab.convexity import monomial_log_norms
from weightlab.criteria import check_necessary_derivative_bound
from weightlab.models import (
    DISC, PLANE, DomainMismatch, GridLimited, InvalidParams, Operator, PolyFunction, Trend, Verdict, ZeroFunction,
)
from weightlab.operators import (
    apply_D, apply_I, boundedness_verdict, canonical_partner, epimorphism_verdict, is_canonical_pairing,
    maximum_term, monomial_norm_ratios, operator_norm_upper_bound, sufficient_boundedness_check, v_rho_weight,
    weighted_log_norm,
)
from weightlab.weights import eval_log, make_builtin, over_one_minus_r, sample_log_profile


class TestCoefficientOperators:
    def test_differentiate(self):
        assert apply_D(PolyFunction((1.0, 2.0, 3.0))).coeffs == (2.0, 6.0)

    def test_integrate(self):
        assert apply_I(PolyFunction((1.0, 2.0, 3.0))).coeffs == (0.0, 1.0, 1.0, 1.0)

    def test_d_undoes_i(self):
        f = PolyFunction((0.5, 0.0, 4.0, 1.25))
        np.testing.assert_allclose(apply_D(apply_I(f)).coeffs, f.coeffs, rtol=1e-15)

    def test_negative_coefficients_rejected(self):
        with pytest.raises(InvalidParams):
            PolyFunction((1.0, -1.0))


class TestWeightedNorm:
    def test_zero_function(self, power_disc):
        with pytest.raises(ZeroFunction):
            weighted_log_norm(PolyFunction((0.0, 0.0)), power_disc(1))

    @pytest.mark.parametrize("n", [1, 5, 40])
    def test_monomial_matches_norm_table(self, power_disc, settings, n):
        v = power_disc(2)
        m = monomial_log_norms(sample_log_profile(v, settings.grid(), settings), n, refine=False)
        assert weighted_log_norm(PolyFunction.monomial(n), v) == pytest.approx(m.A[n], abs=1e-12)

    def test_constant_sees_origin(self, power_disc):
        assert weighted_log_norm(PolyFunction((2.0,)), power_disc(1)) == pytest.approx(math.log(2.0))

    def test_norm_is_monotone_in_coefficients(self, exp_plane):
        v = exp_plane(1)
        small = weighted_log_norm(PolyFunction((0.0, 1.0, 1.0)), v)
        large = weighted_log_norm(PolyFunction((0.0, 1.0, 2.0)), v)
        assert large > small


class TestMaximumTerm:
    def test_small_radius(self):
        assert maximum_term(0.5) == (0.0, 0)

    def test_integer_radius(self):
        value, index = maximum_term(10.0)
        assert index == 10
        assert value == pytest.approx(10.0 * math.log(10.0) - gammaln(11.0), rel=1e-12)

    def test_picks_the_larger_neighbour(self):
        assert maximum_term(2.5)[1] == 2

    def test_negative_radius(self):
        with pytest.raises(ValueError):
            maximum_term(-1.0)


class TestSufficiency:
    def test_v_rho_on_the_disc(self, power_disc):
        # (2/(1-r)) v((1+r)/2) at r = 1/2 is 4 * 4
        assert eval_log(v_rho_weight(power_disc(1)), 0.5) == pytest.approx(math.log(16.0), rel=1e-12)

    def test_v_rho_on_the_plane(self, exp_plane):
        assert eval_log(v_rho_weight(exp_plane(1)), 2.0) == pytest.approx(3.0, rel=1e-12)
        assert v_rho_weight(exp_plane(1)).label == "rho[exp_plane(1)]"

    @pytest.mark.parametrize("alpha", [1.0, 2.0])
    def test_power_weight_bound(self, power_disc, settings, alpha):
        v = power_disc(alpha)
        report = sufficient_boundedness_check(v, over_one_minus_r(v), settings)
        assert report.holds
        assert report.parameters['sup'] == pytest.approx(2.0 ** (alpha + 1.0), rel=1e-6)
        assert operator_norm_upper_bound(v, over_one_minus_r(v), settings) == report.parameters['sup']

    def test_plane_weight_of_order_one(self, exp_plane, settings):
        v = exp_plane(1)
        report = sufficient_boundedness_check(v, v, settings)
        assert report.holds
        assert report.value == pytest.approx(math.e, rel=1e-6)

    def test_domain_mismatch(self, power_disc, exp_plane, settings):
        with pytest.raises(DomainMismatch):
            sufficient_boundedness_check(power_disc(1), exp_plane(1), settings)


class TestMonomialRatios:
    def test_d_and_i_ratios_cancel(self, power_disc, settings):
        v = power_disc(1)
        w = over_one_minus_r(v)
        N = 64
        d = monomial_norm_ratios(Operator.D, v, w, N, settings=settings)
        i = monomial_norm_ratios(Operator.I, v, w, N, settings=settings)
        assert math.isnan(d[0]) and math.isnan(i[N])
        np.testing.assert_allclose(i[:N] + d[1:], 0.0, atol=1e-12)

    def test_exponential_d_ratio(self, exp_plane, settings):
        v = exp_plane(1)
        ratios = monomial_norm_ratios(Operator.D, v, v, 256, settings=settings)
        n = 200
        assert ratios[n] == pytest.approx(1.0 + (n - 1) * math.log((n - 1) / n), abs=1e-6)
        assert math.exp(ratios[n]) == pytest.approx(1.0025, abs=1e-4)

    def test_exponential_i_and_d_ratios_cancel(self, exp_plane, settings):
        v = exp_plane(1)
        N = 256
        d = monomial_norm_ratios(Operator.D, v, v, N, settings=settings)
        i = monomial_norm_ratios(Operator.I, v, v, N, settings=settings)
        np.testing.assert_allclose(i[:200] + d[1:201], 0.0, atol=1e-12)

    def test_strict_mode_raises_on_grid_edge(self, exp_plane):
        settings = AnalysisSettings(plane_x_max=4.0)
        v = exp_plane(1)
        loose = monomial_norm_ratios(Operator.D, v, v, 100, settings=settings)
        assert math.isnan(loose[100])
        with pytest.raises(GridLimited):
            monomial_norm_ratios(Operator.D, v, v, 100, strict=True, settings=settings)

    def test_ratio_arguments(self, power_disc, exp_plane, settings):
        with pytest.raises(DomainMismatch):
            monomial_norm_ratios(Operator.D, power_disc(1), exp_plane(1), 8, settings=settings)
        with pytest.raises(ValueError):
            monomial_norm_ratios(Operator.D, power_disc(1), power_disc(1), 0, settings=settings)


class TestVerdicts:
    @pytest.mark.parametrize("family, params, op, expected", [
        ('power_disc', [1.0], Operator.D, Verdict.BOUNDED),
        ('power_disc', [1.0], Operator.I, Verdict.BOUNDED),
        ('exp_inv_disc', [1.0, 1.0], Operator.D, Verdict.UNBOUNDED),
        ('exp_inv_disc', [1.0, 1.0], Operator.I, Verdict.BOUNDED),
        ('log_power_disc', [1.0], Operator.D, Verdict.BOUNDED),
        ('log_power_disc', [1.0], Operator.I, Verdict.UNBOUNDED),
    ])
    def test_disc_canonical_pairs(self, settings, family, params, op, expected):
        v = make_builtin(family, params, DISC)
        verdict = boundedness_verdict(op, v, canonical_partner(op, v), settings)
        assert verdict.verdict is expected
        assert verdict.norm_lower_bound >= 0.0

    @pytest.mark.parametrize("p, d_expected, i_expected", [
        (0.5, Verdict.BOUNDED, Verdict.UNBOUNDED),
        (1.0, Verdict.BOUNDED, Verdict.BOUNDED),
        (2.0, Verdict.UNBOUNDED, Verdict.BOUNDED),
    ])
    def test_plane_pairs(self, exp_plane, settings, p, d_expected, i_expected):
        v = exp_plane(p)
        assert boundedness_verdict(Operator.D, v, v, settings).verdict is d_expected
        assert boundedness_verdict(Operator.I, v, v, settings).verdict is i_expected

    @pytest.mark.parametrize("family, params, domain, d_bounded, i_bounded", [
        ('power_disc', [0.5], DISC, True, True),
        ('power_disc', [3.0], DISC, True, True),
        ('exp_inv_disc', [2.0, 0.5], DISC, False, True),
        ('log_power_disc', [2.0], DISC, True, False),
        ('exp_plane', [0.5], PLANE, True, False),
        ('exp_plane', [1.0], PLANE, True, True),
        ('power_exp_plane', [2.0, 1.5], PLANE, False, True),
        ('power_exp_plane', [2.0, 0.5], PLANE, True, False),
    ])
    def test_verdicts_never_contradict_known_answers(self, settings, family, params, domain, d_bounded, i_bounded):
        v = make_builtin(family, params, domain)
        for op, bounded in ((Operator.D, d_bounded), (Operator.I, i_bounded)):
            verdict = boundedness_verdict(op, v, canonical_partner(op, v), settings).verdict
            wrong = Verdict.UNBOUNDED if bounded else Verdict.BOUNDED
            assert verdict is not wrong, f"{op.value} on {v.label}"

    @pytest.mark.parametrize("family, params, domain", [
        ('power_disc', [1.0], DISC),
        ('log_power_disc', [2.0], DISC),
        ('exp_plane', [1.0], PLANE),
        ('power_exp_plane', [2.0, 0.5], PLANE),
    ])
    def test_sufficiency_never_meets_a_diverging_necessary_bound(self, settings, family, params, domain):
        v = make_builtin(family, params, domain)
        w = canonical_partner(Operator.D, v)
        verdict = boundedness_verdict(Operator.D, v, w, settings)
        necessary = check_necessary_derivative_bound(v, w, settings)
        if verdict.justification_id == "v_rho_sufficiency":
            assert not (necessary.fails and necessary.estimate.trend is Trend.DIVERGES_TO_INFINITY)
        assert verdict.verdict is not Verdict.UNBOUNDED

    def test_integration_on_the_same_disc_weight(self, power_disc, settings):
        v = power_disc(2)
        verdict = boundedness_verdict(Operator.I, v, v, settings)
        assert verdict.verdict is Verdict.BOUNDED
        assert verdict.justification_id == "universal_disc_i"

    def test_non_canonical_pair_warns(self, power_disc, settings):
        v, w = power_disc(1), power_disc(3)
        assert not is_canonical_pairing(Operator.D, v, w, settings)
        verdict = boundedness_verdict(Operator.D, v, w, settings)
        assert verdict.verdict is Verdict.BOUNDED
        assert verdict.justification_id == "v_rho_sufficiency"
        assert any("not the canonical pairing" in text for text in verdict.warnings)

    def test_domain_mismatch(self, power_disc, exp_plane, settings):
        with pytest.raises(DomainMismatch):
            boundedness_verdict(Operator.D, power_disc(1), exp_plane(1), settings)

    def test_epimorphism(self, power_disc, exp_plane, settings):
        onto = epimorphism_verdict(power_disc(1), settings)
        assert onto.verdict is Verdict.BOUNDED
        assert onto.justification_id == "epimorphism"
        assert epimorphism_verdict(exp_plane(2), settings).verdict is Verdict.UNBOUNDED

    def test_exit_codes(self):
        assert [v.exit_code for v in Verdict] == [0, 1, 2]
