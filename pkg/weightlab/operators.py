#!/usr/bin/env python3
"""
Differentiation and integration on weighted spaces
Coefficient models of D and I, weighted sup-norms of nonnegative polynomials,
the v_rho sufficiency check, monomial norm ratios and the verdict engine.
"""

import math
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from weightlab.config import AnalysisSettings, DEFAULT_SETTINGS
from weightlab.convexity import is_log_convex, minorant_weight, monomial_log_norms
from weightlab.criteria import (
    check_disc_d_conditions, check_disc_i_conditions, check_epimorphism_disc, check_epimorphism_plane,
    check_integral_condition, check_integral_sufficiency_derivative, check_log_domination,
    check_necessary_derivative_bound, check_plane_d_conditions, check_plane_i_conditions, check_regularity,
    classify_weight, estimate_tail,
)
from weightlab.models import (
    ConditionReport, ConditionVerdict, EstimateKind, GridSpec, Operator, OperatorVerdict, PolyFunction,
    RadialWeight, Trend, Verdict, WeightClass,
    DomainMismatch, GridLimited, TooFewLevels, ZeroFunction,
)
from weightlab.weights import (
    LOG2, canonical_partner as _partner, dt_dx, grid_points, merge_breakpoints, sample_log_profile, t_of_x,
    window_levels, x_of_t,
)


# ---------------------------------------------------------------------------
# Operators on coefficients
# ---------------------------------------------------------------------------

def apply_D(f: PolyFunction) -> PolyFunction:
    """f -> f'"""
    c = f.coeffs
    return PolyFunction(tuple(k * c[k] for k in range(1, len(c))))


def apply_I(f: PolyFunction) -> PolyFunction:
    """f -> integral of f from 0 to z"""
    return PolyFunction((0.0,) + tuple(a / (k + 1) for k, a in enumerate(f.coeffs)))


def weighted_log_norm(f: PolyFunction, v: RadialWeight, g: Optional[GridSpec] = None,
                      settings: AnalysisSettings = DEFAULT_SETTINGS) -> float:
    """
    log ||f||_v = max over the grid of log f(r) - log v(r). Nonnegative
    coefficients put the maximum modulus on the positive ray. r = 0 counts
    when f(0) > 0.
    """
    if f.is_zero:
        raise ZeroFunction()
    xs, _ = grid_points(v, g or settings.grid(), settings)
    coeffs = np.asarray(f.coeffs, dtype=float)
    ks = np.nonzero(coeffs > 0)[0]
    log_f = logsumexp(ks[:, None] * xs[None, :] + np.log(coeffs[ks])[:, None], axis=0)
    best = float(np.max(log_f - v.log_profile(xs)))
    origin = v.log_at_origin()
    if coeffs[0] > 0 and math.isfinite(origin):
        best = max(best, math.log(coeffs[0]) - origin)
    return best


def maximum_term(R: float) -> Tuple[float, int]:
    """log of max_n R^n/n! and the central index, for e^z = sum of the iterated integrals of 1"""
    if R < 0:
        raise ValueError("R must be nonnegative")
    if R < 1:
        return 0.0, 0
    candidates = {int(math.floor(R)), int(math.ceil(R))}
    best = max(candidates, key=lambda n: n * math.log(R) - gammaln(n + 1))
    return float(best * math.log(R) - gammaln(best + 1)), best


# ---------------------------------------------------------------------------
# Sufficiency through v_rho
# ---------------------------------------------------------------------------

def v_rho_weight(v: RadialWeight) -> RadialWeight:
    """
    (1/rho) max of v over the disc of radius rho around r: rho = (1-r)/2 on
    the disc, giving (2/(1-r)) v((1+r)/2), and rho = 1 on the plane, giving v(r+1).
    """
    phi, slope = v.phi_fn, v.slope_fn
    if v.domain.is_disc:
        def shift(x):
            return np.log1p(np.expm1(x) / 2.0)

        def phi_rho(x):
            return LOG2 - np.log(-np.expm1(x)) + phi(shift(x))

        def slope_rho(x):
            r = np.exp(x)
            return dt_dx(x) + slope(shift(x)) * r / (1.0 + r)

        def preimage(xp):
            return np.log(2.0 * np.exp(xp) - 1.0)

        horizon = None if v.horizon is None else float(x_of_t(t_of_x(v.horizon) - LOG2))
        inside = [b for b in v.breakpoints if b > -LOG2]
    else:
        def shift(x):
            return np.log1p(np.exp(x))

        def phi_rho(x):
            return phi(shift(x))

        def slope_rho(x):
            r = np.exp(x)
            return slope(shift(x)) * r / (1.0 + r)

        def preimage(xp):
            return np.log(np.expm1(xp))

        horizon = None if v.horizon is None else float(np.log(np.expm1(v.horizon)))
        inside = [b for b in v.breakpoints if b > 0]

    breakpoints = tuple(float(preimage(b)) for b in inside)
    if horizon is not None:
        breakpoints = tuple(b for b in breakpoints if b <= horizon)
    return replace(v, label=f"rho[{v.label}]", phi_fn=phi_rho, slope_fn=slope_rho, family=None, params=(),
                   breakpoints=breakpoints, level_breaks=None, horizon=horizon, tags=frozenset(), equivalent=None)


def sufficient_boundedness_check(v: RadialWeight, w: RadialWeight,
                                 settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """limsup v_rho/w < infinity implies D: H_v -> H_w is bounded with norm at most sup v_rho/w"""
    if v.domain != w.domain:
        raise DomainMismatch("v_rho check needs weights on the same domain", details={'v': v.label, 'w': w.label})
    rho = v_rho_weight(v)
    xs, _ = grid_points(rho, settings.grid(), settings)
    xs = merge_breakpoints(xs, w.breakpoints)
    levels = window_levels(rho, xs)
    log_ratio = rho.log_profile(xs) - w.log_profile(xs)
    with np.errstate(over='ignore'):
        ratio = np.exp(log_ratio)
    try:
        est = estimate_tail(ratio, levels, EstimateKind.LIMSUP, xs, settings)
    except TooFewLevels as e:
        return ConditionReport("v_rho_sufficiency", ConditionVerdict.INCONCLUSIVE, f"too few tail windows: {e}")
    if est.is_bounded():
        verdict = ConditionVerdict.HOLDS
    elif est.is_unbounded():
        verdict = ConditionVerdict.FAILS
    else:
        verdict = ConditionVerdict.INCONCLUSIVE
    return ConditionReport("v_rho_sufficiency", verdict, f"v_rho/w for w = {w.label}: {est.describe()}",
                           estimate=est, value=est.value, parameters={'sup': float(np.max(ratio))},
                           trace=(xs, ratio))


def operator_norm_upper_bound(v: RadialWeight, w: RadialWeight,
                              settings: AnalysisSettings = DEFAULT_SETTINGS) -> Optional[float]:
    """sup v_rho/w over the grid when the sufficiency check holds, else None"""
    report = sufficient_boundedness_check(v, w, settings)
    return report.parameters['sup'] if report.holds else None


# ---------------------------------------------------------------------------
# Monomial ratios
# ---------------------------------------------------------------------------

def _norms(v: RadialWeight, N: int, settings: AnalysisSettings):
    p = sample_log_profile(v, settings.grid(), settings)
    return monomial_log_norms(p, N, refine=True, on_boundary='flag')


def monomial_norm_ratios(op: Operator, v: RadialWeight, w: RadialWeight, N: int, strict: bool = False,
                         settings: AnalysisSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """
    log ||op(z^n)|| - log ||z^n|| indexed by n = 0..N.

    D (H_v -> H_w): log n + A^w_{n-1} - A^v_n for n >= 1.
    I (H_w -> H_v): -log(n+1) + A^v_{n+1} - A^w_n for n <= N-1.
    Undefined entries and entries resting on a grid-limited norm are NaN;
    strict=True raises GridLimited instead.
    """
    if v.domain != w.domain:
        raise DomainMismatch("Monomial ratios need weights on the same domain")
    if N < 1:
        raise ValueError("N must be at least 1")
    mv = _norms(v, N, settings)
    mw = mv if w is v else _norms(w, N, settings)
    ratios = np.full(N + 1, np.nan)
    n = np.arange(1, N + 1)

    if op is Operator.D:
        limited = mv.grid_limited[n] | mw.grid_limited[n - 1]
        values = np.log(n) + mw.A[n - 1] - mv.A[n]
        target = n
    else:
        m = n - 1
        limited = mv.grid_limited[m + 1] | mw.grid_limited[m]
        values = -np.log(m + 1.0) + mv.A[m + 1] - mw.A[m]
        target = m

    if strict and np.any(limited):
        raise GridLimited(int(target[np.argmax(limited)]), details={'v': v.label, 'w': w.label})
    ratios[target] = np.where(limited, np.nan, values)
    return ratios


def monomial_ratio_report(ratios: np.ndarray, settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """Trend of the monomial ratios over dyadic blocks of n"""
    ns = np.arange(ratios.size, dtype=float)
    keep = ns >= 1
    levels = np.floor(np.log2(ns[keep])).astype(int)
    try:
        est = estimate_tail(ratios[keep], levels, EstimateKind.LIMSUP, ns[keep], settings)
    except TooFewLevels as e:
        return ConditionReport("monomial_ratio", ConditionVerdict.INCONCLUSIVE, f"too few blocks of n: {e}")
    # divergence certifies unboundedness; anything else is only a lower bound
    verdict = ConditionVerdict.FAILS if est.is_unbounded() else ConditionVerdict.INCONCLUSIVE
    return ConditionReport("monomial_ratio", verdict, f"log monomial ratio: {est.describe()}", estimate=est,
                           value=est.value, trace=(ns[keep], ratios[keep]))


def _norm_lower_bound(ratios: np.ndarray) -> float:
    finite = ratios[np.isfinite(ratios)]
    return float(np.exp(np.max(finite))) if finite.size else 0.0


# ---------------------------------------------------------------------------
# Pairings
# ---------------------------------------------------------------------------

def canonical_partner(op: Operator, v: RadialWeight) -> RadialWeight:
    """The partner weight of the equivalence theorems: v/(1-r) on the disc, v on the plane"""
    return _partner(v)


def _same_profile(a: RadialWeight, b: RadialWeight, settings: AnalysisSettings) -> bool:
    if a is b:
        return True
    xs, _ = grid_points(a, settings.grid(), settings)
    return bool(np.allclose(a.log_profile(xs), b.log_profile(xs), rtol=1e-12, atol=1e-9))


def is_canonical_pairing(op: Operator, v: RadialWeight, w: RadialWeight,
                         settings: AnalysisSettings = DEFAULT_SETTINGS) -> bool:
    if v.domain != w.domain:
        return False
    return _same_profile(canonical_partner(op, v), w, settings)


# ---------------------------------------------------------------------------
# Verdict engine
# ---------------------------------------------------------------------------

def _decisive(reports: List[ConditionReport]) -> Optional[ConditionReport]:
    for report in reports:
        if report.verdict is not ConditionVerdict.INCONCLUSIVE:
            return report
    return None


class _VerdictBuilder:
    """Collects evidence and warnings for one (op, v, w) request"""

    def __init__(self, op: Operator, v: RadialWeight, w: RadialWeight, lower_bound: float):
        self.op, self.v, self.w = op, v, w
        self.lower_bound = lower_bound
        self.evidence: List[ConditionReport] = []
        self.warnings: List[str] = []

    def add(self, *reports: ConditionReport) -> None:
        self.evidence.extend(reports)

    def build(self, verdict: Verdict, justification_id: str, text: str,
              upper_bound: Optional[float] = None) -> OperatorVerdict:
        return OperatorVerdict(operator=self.op, v_label=self.v.label, w_label=self.w.label, verdict=verdict,
                               justification_id=justification_id, justification=text,
                               norm_lower_bound=self.lower_bound, evidence=self.evidence,
                               warnings=self.warnings, upper_bound=upper_bound)


def _transfer_equivalent(op: Operator, v: RadialWeight, w: RadialWeight, builder: _VerdictBuilder,
                         settings: AnalysisSettings) -> Optional[OperatorVerdict]:
    """Decide the pair through norm-equivalent reference weights, if either side carries one"""
    if v.equivalent is None and w.equivalent is None:
        return None
    u_v = v.equivalent.weight if v.equivalent is not None else v
    if w is v:
        u_w = u_v
    else:
        u_w = w.equivalent.weight if w.equivalent is not None else w
    inner = boundedness_verdict(op, u_v, u_w, settings)
    builder.add(*inner.evidence)
    if inner.verdict is Verdict.INCONCLUSIVE:
        builder.warnings.append(f"equivalent pair ({u_v.label}, {u_w.label}) was inconclusive")
        return None
    constants = [e.log_constant for e in (v.equivalent, w.equivalent) if e is not None]
    return builder.build(inner.verdict, "norm_equivalent_weight",
                         f"H_v and H_w coincide with H_{u_v.label} and H_{u_w.label} "
                         f"(log constants {', '.join(f'{c:.6g}' for c in constants)}); "
                         f"there: {inner.justification}")


def _equivalence_route(op: Operator, v: RadialWeight, builder: _VerdictBuilder,
                       settings: AnalysisSettings) -> Optional[OperatorVerdict]:
    """Canonical pairing: the condition batteries decide for log-convex v or its minorant"""
    p = sample_log_profile(v, settings.grid(), settings)
    convex = is_log_convex(p)[0]
    if not convex and v.domain.is_disc and op is Operator.I:
        # H_v = H_vbar does not carry over to the integration pairing
        return None
    base = v if convex else minorant_weight(v, settings)
    via = "v" if convex else f"the log-convex minorant {base.label}"

    if v.domain.is_disc and op is Operator.D:
        reports = check_disc_d_conditions(base, settings)
        builder.add(*reports)
        deciding = _decisive(reports)
        if deciding is None:
            return None
        if deciding.holds:
            return builder.build(Verdict.BOUNDED, "disc_d.equivalence",
                                 f"{deciding.condition_id} holds for {via}: {deciding.detail}")
        if convex:
            return builder.build(Verdict.UNBOUNDED, "disc_d.equivalence",
                                 f"{deciding.condition_id} fails for log-convex v: {deciding.detail}")
        return None

    if not v.domain.is_disc and op is Operator.D:
        derivative, growth = check_plane_d_conditions(base, settings)
        builder.add(growth, derivative)
        if growth.verdict is ConditionVerdict.INCONCLUSIVE:
            return None
        verdict = Verdict.BOUNDED if growth.holds else Verdict.UNBOUNDED
        return builder.build(verdict, "plane_d.equivalence", f"log v(r) = O(r) {'holds' if growth.holds else 'fails'}"
                                                            f" for {via}: {growth.detail}")

    if not v.domain.is_disc:
        reports = check_plane_i_conditions(base, settings)
        builder.add(*reports)
        deciding = _decisive(reports)
        if deciding is None:
            return None
        verdict = Verdict.BOUNDED if deciding.holds else Verdict.UNBOUNDED
        return builder.build(verdict, "plane_i.equivalence",
                             f"{deciding.condition_id} {'holds' if deciding.holds else 'fails'} for {via}: "
                             f"{deciding.detail}")

    reports = check_disc_i_conditions(base, settings)
    builder.add(*reports)
    holding = [r for r in reports if r.holds]
    if holding:
        return builder.build(Verdict.BOUNDED, "disc_i.equivalence",
                             f"{holding[0].condition_id} holds for log-convex v: {holding[0].detail}")
    return None


def _sufficiency_route(op: Operator, v: RadialWeight, w: RadialWeight, builder: _VerdictBuilder,
                       settings: AnalysisSettings) -> Optional[OperatorVerdict]:
    if op is Operator.D:
        report = sufficient_boundedness_check(v, w, settings)
        builder.add(report)
        if report.holds:
            return builder.build(Verdict.BOUNDED, "v_rho_sufficiency", report.detail,
                                 upper_bound=report.parameters['sup'])
        return None
    integral = check_integral_condition(w, v, settings)
    builder.add(integral)
    if integral.holds:
        return builder.build(Verdict.BOUNDED, "integral_sufficiency", integral.detail,
                             upper_bound=integral.parameters.get('sup'))
    derivative = check_integral_sufficiency_derivative(w, v, settings)
    builder.add(derivative)
    if derivative.holds:
        return builder.build(Verdict.BOUNDED, "integral_sufficiency", derivative.detail)
    return None


def _necessity_route(op: Operator, v: RadialWeight, w: RadialWeight, canonical: bool, builder: _VerdictBuilder,
                     settings: AnalysisSettings) -> Optional[OperatorVerdict]:
    if op is Operator.D:
        report = check_necessary_derivative_bound(v, w, settings)
        builder.add(report)
        if report.fails and report.estimate is not None and report.estimate.trend is Trend.DIVERGES_TO_INFINITY:
            return builder.build(Verdict.UNBOUNDED, "derivative_necessary", report.detail)
        return None

    tags = classify_weight(w, settings)
    integral = next((r for r in builder.evidence if r.condition_id == "integral"), None)
    necessary_classes = (WeightClass.CK_WEIGHT, WeightClass.BBT_WEIGHT, WeightClass.H_WEIGHT)
    members = [c.value for c in necessary_classes if tags.has(c)]
    if members and integral is not None and integral.fails:
        return builder.build(Verdict.UNBOUNDED, "integral_necessity",
                             f"w is {'/'.join(members)}, so the integral condition is necessary, and it fails")

    if canonical and v.domain.is_disc:
        domination = check_log_domination(v, settings)
        builder.add(domination)
        if domination.fails:
            return builder.build(Verdict.UNBOUNDED, "log_domination",
                                 f"log(1/(1-r)) is not O(log v): {domination.detail}")
        regular = check_regularity(v, settings)
        builder.add(regular)
        if regular.holds and regular.value == 0.0:
            return builder.build(Verdict.UNBOUNDED, "regularity", "v is regular with L_v = 0")
    return None


def boundedness_verdict(op: Operator, v: RadialWeight, w: RadialWeight,
                        settings: AnalysisSettings = DEFAULT_SETTINGS) -> OperatorVerdict:
    """
    Decide D: H_v -> H_w or I: H_w -> H_v.

    Order: the universal result for I with w = v on the disc, divergent
    monomial ratios, norm-equivalent reference weights, the equivalence
    theorems on canonical pairs, sufficiency, necessity. Bounded only when a
    sufficient condition holds, Unbounded only when a necessary one fails.
    """
    if v.domain != w.domain:
        raise DomainMismatch("v and w live on different domains",
                             details={'v': v.label, 'w': w.label, 'v_domain': v.domain.name,
                                      'w_domain': w.domain.name})
    ratios = monomial_norm_ratios(op, v, w, settings.monomial_order(v.domain.is_disc), settings=settings)
    builder = _VerdictBuilder(op, v, w, _norm_lower_bound(ratios))
    ratio_report = monomial_ratio_report(ratios, settings)
    builder.add(ratio_report)

    if op is Operator.I and v.domain.is_disc and _same_profile(v, w, settings):
        return builder.build(Verdict.BOUNDED, "universal_disc_i",
                             "I maps H_v(disc) into itself for every radial weight v")
    if ratio_report.fails:
        return builder.build(Verdict.UNBOUNDED, "monomial_divergence",
                             f"normalized monomials witness an unbounded operator: {ratio_report.detail}")

    transferred = _transfer_equivalent(op, v, w, builder, settings)
    if transferred is not None:
        return transferred

    canonical = is_canonical_pairing(op, v, w, settings)
    if canonical:
        decided = _equivalence_route(op, v, builder, settings)
        if decided is not None:
            return decided
    else:
        builder.warnings.append(f"({v.label}, {w.label}) is not the canonical pairing for {op.value}; "
                                f"equivalence theorems skipped")

    decided = _sufficiency_route(op, v, w, builder, settings) or \
        _necessity_route(op, v, w, canonical, builder, settings)
    if decided is not None:
        return decided

    if canonical and v.domain.is_disc and op is Operator.I:
        text = "sufficiency failed and no necessary condition is known for this pairing"
    else:
        text = "no sufficient condition holds and no necessary condition fails"
    return builder.build(Verdict.INCONCLUSIVE, "inconclusive", text)


def epimorphism_verdict(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> OperatorVerdict:
    """
    D is onto on the canonical pair exactly when D and I are both bounded
    there. Bounded here reads as "D is an epimorphism".
    """
    w = _partner(v)
    d = boundedness_verdict(Operator.D, v, w, settings)
    i = boundedness_verdict(Operator.I, v, w, settings)
    check = check_epimorphism_disc(v, settings) if v.domain.is_disc else check_epimorphism_plane(v, settings)

    if d.verdict is Verdict.BOUNDED and i.verdict is Verdict.BOUNDED:
        verdict = Verdict.BOUNDED
        text = f"D and I are both bounded ({d.justification_id}, {i.justification_id})"
    elif Verdict.UNBOUNDED in (d.verdict, i.verdict):
        verdict = Verdict.UNBOUNDED
        failed = d if d.verdict is Verdict.UNBOUNDED else i
        text = f"{failed.operator.value} is unbounded ({failed.justification_id})"
    else:
        verdict = Verdict.INCONCLUSIVE
        text = "boundedness of D or I is undecided"
    warnings = list(d.warnings) + list(i.warnings)
    if check.verdict is not ConditionVerdict.INCONCLUSIVE and \
            (check.holds != (verdict is Verdict.BOUNDED)) and verdict is not Verdict.INCONCLUSIVE:
        warnings.append(f"{check.condition_id} check disagrees with the operator verdicts: {check.detail}")
    return OperatorVerdict(operator=Operator.D, v_label=v.label, w_label=w.label, verdict=verdict,
                           justification_id="epimorphism", justification=text,
                           norm_lower_bound=d.norm_lower_bound, evidence=[check] + d.evidence + i.evidence,
                           warnings=warnings)
