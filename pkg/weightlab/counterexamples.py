#!/usr/bin/env python3
"""
Counterexample weights
Non-log-convex weights whose convex minorant (or a norm-equivalent weight)
satisfies a condition the raw weight violates, built from parameter
sequences and truncated at n_max.
"""

import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from weightlab.config import AnalysisSettings, DEFAULT_SETTINGS
from weightlab.convexity import convex_minorant, evaluate_minorant, minorant_weight
from weightlab.criteria import (
    check_disc_d_conditions, check_integral_condition, check_integral_sufficiency_derivative,
    check_plane_d_conditions, check_plane_i_conditions, estimate_tail,
)
from weightlab.expressions import compile_sequence
from weightlab.models import (
    DISC, PLANE, CounterexampleBundle, EstimateKind, GapCheck, Operator, SequencePair, Trend, Verdict,
    SequencePropertyViolation, TooFewLevels,
)
from weightlab.operators import boundedness_verdict
from weightlab.weights import (
    LOG2, make_builtin, make_custom, make_piecewise, one_minus_r, over_one_minus_r, sample_log_profile, t_of_x,
    validate_weight, x_of_t,
)


# Sequences used when no override is given
DEFAULT_SEQUENCES = {
    'ex1': {'a': "3^-n", 'b': "2^-n - 3^-n", 'n_max': 30},
    'ex2': {'a': "3^-n", 'b': "log(1+1/n) - 3^-n", 'n_max': 12},
    'ex3': {'eps': "exp(-2*n)", 'n_max': 15},
    'ex4': {'jumps': "n + 1", 'n_max': 20},
}

TAIL_CAP = 4096
CONSTANT_TERMS = 30


def _sequence_pair(name: str, a: Optional[str], b: Optional[str], n_max: Optional[int]) -> SequencePair:
    defaults = DEFAULT_SEQUENCES[name]
    a_text, b_text = a or defaults['a'], b or defaults['b']
    return SequencePair(a=compile_sequence(a_text), b=compile_sequence(b_text),
                        n_max=int(n_max or defaults['n_max']), a_text=a_text, b_text=b_text)


def _tail_trend(values: np.ndarray, settings: AnalysisSettings):
    """Trend of a sequence with every index its own window"""
    try:
        return estimate_tail(values, np.arange(values.size), EstimateKind.LIMSUP, None, settings)
    except TooFewLevels:
        return None


def _tends_to_zero(estimate, settings: AnalysisSettings) -> bool:
    if estimate is None or not estimate.is_stable:
        return False
    if estimate.trend is Trend.DECAYS_TO_ZERO:
        return True
    return estimate.trend is Trend.CONVERGES_TO and abs(estimate.limit) <= settings.abs_tol


def _check_common(n: np.ndarray, a: np.ndarray, b: np.ndarray) -> None:
    """Positivity, a_n < b_n from n = 2 on, a_n + b_n strictly decreasing"""
    for values in (a, b):
        bad = ~(np.isfinite(values) & (values > 0))
        if np.any(bad):
            raise SequencePropertyViolation(int(n[np.argmax(bad)]), "positive")
    smaller = (a >= b) & (n >= 2)
    if np.any(smaller):
        raise SequencePropertyViolation(int(n[np.argmax(smaller)]), "2", details={'a': a.tolist(), 'b': b.tolist()})
    rising = np.diff(a + b) >= 0
    if np.any(rising):
        raise SequencePropertyViolation(int(n[1:][np.argmax(rising)]), "3")


def _two_slope_profile(S: np.ndarray, a: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    phi is 1 up to S_0 + a_1, then rises by 1 over each a-segment and by 1 over
    each b-segment, reaching 2n at S_n. phi_bar keeps the first two pieces of
    phi and then joins the points (S_n, 2n) by chords.
    """
    n_max = a.size
    xs = [S[0] + a[0], S[1]]
    phis = [1.0, 2.0]
    for n in range(2, n_max + 1):
        xs += [S[n - 1] + a[n - 1], S[n]]
        phis += [2.0 * n - 1.0, 2.0 * n]
    bar_xs = np.concatenate([[S[0] + a[0]], S[1:]])
    bar_phis = np.concatenate([[1.0], 2.0 * np.arange(1, n_max + 1)])
    return np.asarray(xs), np.asarray(phis), bar_xs, bar_phis


def _check_minorant_junction(bar_xs: np.ndarray, bar_phis: np.ndarray) -> None:
    slopes = np.diff(bar_phis) / np.diff(bar_xs)
    if slopes.size >= 2 and slopes[0] > slopes[1]:
        raise SequencePropertyViolation(1, "minorant", details={'first_slope': float(slopes[0]),
                                                                'second_slope': float(slopes[1])})


def build_example_d_disc(s: SequencePair, settings: AnalysisSettings = DEFAULT_SETTINGS) -> CounterexampleBundle:
    """
    Disc weight with D: H_v -> H_{v/(1-r)} bounded although
    limsup (1-r)v'/v = infinity. S_n = -sum_{k>n}(a_k + b_k).
    """
    n, a_all, b_all = s.values(TAIL_CAP)
    terms = a_all + b_all
    n_max = s.n_max
    _check_common(n[:n_max], a_all[:n_max], b_all[:n_max])

    # tail sums over the stabilized series
    tails = np.cumsum(terms[::-1])[::-1]
    if not np.isfinite(tails[0]) or terms[-1] > 1e-16 * tails[n_max]:
        raise SequencePropertyViolation(TAIL_CAP, "1", "Series of a_n + b_n does not stabilize",
                                        details={'last_term': float(terms[-1])})
    # S_n = -sum_{k>n}, n = 0..n_max
    S = -tails[:n_max + 1]
    a, b = a_all[:n_max], b_all[:n_max]

    ratio_trend = _tail_trend(a / b, settings)
    if not _tends_to_zero(ratio_trend, settings):
        raise SequencePropertyViolation(n_max, "4", "a_n/b_n does not tend to 0")
    L_values = -S[1:] / (a + b)
    L_trend = _tail_trend(L_values, settings)
    if L_trend is None or L_trend.trend is not Trend.CONVERGES_TO or not L_trend.limit > 0:
        raise SequencePropertyViolation(n_max, "5", "tail ratio does not settle at a positive limit")
    L = float(L_trend.limit)

    xs, phis, bar_xs, bar_phis = _two_slope_profile(S, a)
    _check_minorant_junction(bar_xs, bar_phis)
    horizon = float(S[-1])
    level_breaks = tuple(S.tolist())
    v = make_piecewise(xs, phis, DISC, label="ex1", level_breaks=level_breaks, horizon=horizon)
    v_bar = make_piecewise(bar_xs, bar_phis, DISC, label="ex1_bar", level_breaks=level_breaks, horizon=horizon)
    validate_weight(v, settings)
    validate_weight(v_bar, settings)
    return CounterexampleBundle(
        name="ex1", v=v, v_bar=v_bar,
        constants={'L': L, 'limit': 2.0 * (L + 1.0), 'M': float(-S[0]), 'n_max': float(n_max)},
        breakpoints=S[1:].copy(), breakpoint_values=2.0 * np.arange(1, n_max + 1),
        notes=(f"a_n = {s.a_text}", f"b_n = {s.b_text}"))


def build_example_d_plane(s: SequencePair, settings: AnalysisSettings = DEFAULT_SETTINGS) -> CounterexampleBundle:
    """
    Plane weight with log v(r) = O(r) through its minorant although
    limsup v'/v = infinity. S_n = sum_{k<=n}(a_k + b_k).
    """
    n, a, b = s.values()
    n_max = s.n_max
    _check_common(n, a, b)
    S = np.concatenate([[0.0], np.cumsum(a + b)])
    if not S[-1] - S[n_max // 2] > 1e-6 * max(1.0, abs(S[-1])):
        raise SequencePropertyViolation(n_max, "1", "partial sums of a_n + b_n have stopped growing")

    growth = np.exp(S[:-1])
    small_trend = _tail_trend(a * growth, settings)
    if not _tends_to_zero(small_trend, settings):
        raise SequencePropertyViolation(n_max, "4", "a_n exp(S_{n-1}) does not tend to 0")
    L_trend = _tail_trend((a + b) * growth, settings)
    if L_trend is None or L_trend.trend is not Trend.CONVERGES_TO or not L_trend.limit > 0:
        raise SequencePropertyViolation(n_max, "5", "(a_n + b_n) exp(S_{n-1}) does not settle at a positive limit")
    L = float(L_trend.limit)

    xs, phis, bar_xs, bar_phis = _two_slope_profile(S, a)
    _check_minorant_junction(bar_xs, bar_phis)
    horizon = float(S[-1])
    level_breaks = tuple(S.tolist())
    v = make_piecewise(xs, phis, PLANE, label="ex2", level_breaks=level_breaks, horizon=horizon)
    v_bar = make_piecewise(bar_xs, bar_phis, PLANE, label="ex2_bar", level_breaks=level_breaks, horizon=horizon)
    validate_weight(v, settings)
    validate_weight(v_bar, settings)
    slopes = 2.0 / (a + b)
    return CounterexampleBundle(
        name="ex2", v=v, v_bar=v_bar,
        constants={'L': L, 'S_n_max': float(S[-1]), 'last_minorant_slope': float(slopes[-1]),
                   'n_max': float(n_max)},
        breakpoints=S[1:].copy(), breakpoint_values=2.0 * np.arange(1, n_max + 1),
        notes=(f"a_n = {s.a_text}", f"b_n = {s.b_text}"))


def _offsets(eps: np.ndarray) -> np.ndarray:
    """Delta_k = e^{k + eps_k} - (e^k + eps_k), without cancellation"""
    k = np.arange(1, eps.size + 1, dtype=float)
    return np.exp(k) * np.expm1(eps) - eps


def build_example_i_plane(eps: Callable[[np.ndarray], np.ndarray], n_max: int = 15, eps_text: str = "eps",
                          settings: AnalysisSettings = DEFAULT_SETTINGS) -> CounterexampleBundle:
    """
    Plane weight squeezed between e^{r-C} and e^r, so H_v = H_{e^r}, although
    liminf v'/v = 0: unit-slope pieces on (n, n + eps_n], e^x - sum Delta elsewhere.
    """
    count = max(n_max, CONSTANT_TERMS)
    k = np.arange(1, count + 1, dtype=float)
    with np.errstate(over='ignore', under='ignore'):
        e = np.broadcast_to(np.asarray(eps(k), dtype=float), k.shape).copy()
    bad = ~(np.isfinite(e) & (e > 0))
    if np.any(bad):
        raise SequencePropertyViolation(int(k[np.argmax(bad)]), "positive")
    if not e[0] < 1:
        raise SequencePropertyViolation(1, "eps_1", "eps_1 must be below 1")
    if np.any(np.diff(e) >= 0):
        raise SequencePropertyViolation(int(k[1:][np.argmax(np.diff(e) >= 0)]), "decreasing")

    deltas = _offsets(e)
    partial = np.cumsum(deltas)
    if not (np.isfinite(partial[-1]) and deltas[-1] <= 1e-12 * max(1.0, partial[-1])):
        raise SequencePropertyViolation(count, "summable", "sum of Delta_k has not stabilized",
                                        details={'last_term': float(deltas[-1])})
    C = float(partial[-1])

    eps_used = e[:n_max]
    cumulative = np.concatenate([[0.0], partial[:n_max]])  # D_k = sum_{j<=k} Delta_j

    def phi(x):
        x = np.asarray(x, dtype=float)
        seg = np.clip(np.ceil(x) - 1.0, 1.0, float(n_max)).astype(int)
        start = seg.astype(float)
        linear = x - start + np.exp(start) - cumulative[seg - 1]
        exponential = np.exp(x) - cumulative[seg]
        out = np.where(x <= start + eps_used[seg - 1], linear, exponential)
        return np.where(x <= 1.0, np.exp(x), out)

    def slope(x):
        x = np.asarray(x, dtype=float)
        seg = np.clip(np.floor(x), 1.0, float(n_max)).astype(int)
        start = seg.astype(float)
        on_linear = (x >= start) & (x < start + eps_used[seg - 1])
        return np.where((x >= 1.0) & on_linear, 1.0, np.exp(x))

    breakpoints = np.sort(np.concatenate([np.arange(1, n_max + 1, dtype=float),
                                          np.arange(1, n_max + 1, dtype=float) + eps_used]))
    horizon = float(n_max + 1)
    v = make_custom(PLANE, "ex3", phi, slope, breakpoints=breakpoints,
                    level_breaks=tuple(float(j) for j in range(0, n_max + 2)), horizon=horizon, smooth=False)
    reference = make_builtin('exp_plane', [1.0], PLANE, settings)
    v = v.with_equivalent(reference, C, note="e^{r - C} <= v(r) <= e^r")
    validate_weight(v, settings)
    return CounterexampleBundle(
        name="ex3", v=v, v_bar=minorant_weight(v, settings),
        constants={'C': C, 'C_truncated': float(cumulative[-1]), 'last_term': float(deltas[-1]),
                   'n_max': float(n_max)},
        breakpoints=np.arange(1, n_max + 1, dtype=float),
        breakpoint_values=phi(np.arange(1, n_max + 1, dtype=float)),
        notes=(f"eps_k = {eps_text}",))


def build_example_integral_gap_disc(jumps: Callable[[np.ndarray], np.ndarray], n_max: int = 20,
                                    jumps_text: str = "j", settings: AnalysisSettings = DEFAULT_SETTINGS
                                    ) -> CounterexampleBundle:
    """
    Disc weight, linear in r between r_n = 1 - 2^-n: slope 1 on odd segments,
    a jump of j_n across the n-th even segment. With w = v the integral
    condition holds while w/v' is unbounded.
    """
    idx = np.arange(1, n_max + 1, dtype=float)
    with np.errstate(over='ignore'):
        j = np.broadcast_to(np.asarray(jumps(idx), dtype=float), idx.shape).copy()
    bad = ~(np.isfinite(j) & (j > 0))
    if np.any(bad):
        raise SequencePropertyViolation(int(idx[np.argmax(bad)]), "jump", "jumps must be positive")
    if not j[-1] > j[n_max // 2]:
        raise SequencePropertyViolation(n_max, "jump", "jumps must keep growing over the checked range")

    # segment i runs over 1 - r in [2^-(i+1), 2^-i]; work in s = 1 - r near r = 1
    segments = 2 * n_max
    s_knots = 2.0 ** -np.arange(segments + 1, dtype=float)  # 1 - r_i
    lengths = s_knots[:-1] - s_knots[1:]
    rises = np.empty(segments)
    rises[0::2] = lengths[0::2]  # odd segments, slope 1
    rises[1::2] = j              # even segments
    gammas = rises / lengths
    values = np.concatenate([[1.0], 1.0 + np.cumsum(rises)])

    def _segment(x):
        x = np.asarray(x, dtype=float)
        i = np.floor(t_of_x(x) / LOG2 + 1e-9).astype(int)
        i = np.clip(i, 0, segments - 1)
        return i, values[i] + gammas[i] * (s_knots[i] - one_minus_r(x))

    def phi(x):
        _, level = _segment(x)
        return np.log(level)

    def slope(x):
        i, level = _segment(x)
        return gammas[i] * np.exp(np.asarray(x, dtype=float)) / level

    # knots on the dyadic t-grid, bit-for-bit
    knots = x_of_t(np.arange(1, segments + 1, dtype=float) * LOG2)
    v = make_custom(DISC, "ex4", phi, slope, breakpoints=knots,
                    level_breaks=tuple(knots[1::2].tolist()), horizon=float(knots[-1]), smooth=False)
    validate_weight(v, settings)
    return CounterexampleBundle(
        name="ex4", v=v, v_bar=minorant_weight(v, settings),
        constants={'v_end': float(values[-1]), 'jump_sum': float(j.sum()), 'n_max': float(n_max)},
        breakpoints=knots.copy(), breakpoint_values=np.log(values[1:]),
        notes=(f"j_n = {jumps_text}",))


def build_example(name: str, a: Optional[str] = None, b: Optional[str] = None, eps: Optional[str] = None,
                  jumps: Optional[str] = None, n_max: Optional[int] = None,
                  settings: AnalysisSettings = DEFAULT_SETTINGS) -> CounterexampleBundle:
    """Build ex1..ex4 with optional sequence overrides"""
    if name in ('ex1', 'ex2'):
        pair = _sequence_pair(name, a, b, n_max)
        return build_example_d_disc(pair, settings) if name == 'ex1' else build_example_d_plane(pair, settings)
    defaults = DEFAULT_SEQUENCES.get(name)
    if defaults is None:
        raise KeyError(name)
    if name == 'ex3':
        text = eps or defaults['eps']
        return build_example_i_plane(compile_sequence(text), int(n_max or defaults['n_max']), text, settings)
    text = jumps or defaults['jumps']
    return build_example_integral_gap_disc(compile_sequence(text), int(n_max or defaults['n_max']), text, settings)


# ---------------------------------------------------------------------------
# Designed gaps
# ---------------------------------------------------------------------------

def _minorant_agreement(bundle: CounterexampleBundle, settings: AnalysisSettings) -> GapCheck:
    p = sample_log_profile(bundle.v, settings.grid(), settings)
    q = convex_minorant(p)
    inside = (bundle.breakpoints > p.xs[0]) & (bundle.breakpoints <= p.xs[-1])
    hull = evaluate_minorant(q, bundle.breakpoints[inside])
    error = float(np.max(np.abs(hull - bundle.breakpoint_values[inside]))) if np.any(inside) else math.inf
    return GapCheck("minorant_matches_closed_form", error <= 1e-9,
                    f"max |hull - phi_bar| over {int(inside.sum())} breakpoints = {error:.3g}")


def _verdict_check(name: str, op: Operator, v, w, expected: Verdict, settings: AnalysisSettings,
                   justification: Optional[str] = None) -> GapCheck:
    verdict = boundedness_verdict(op, v, w, settings)
    passed = verdict.verdict is expected and (justification is None or verdict.justification_id == justification)
    return GapCheck(name, passed, f"{op.value} on ({v.label}, {w.label}): {verdict.verdict.value} "
                                  f"({verdict.justification_id})", verdict.evidence[:3])


def _gaps_ex1(bundle: CounterexampleBundle, settings: AnalysisSettings) -> List[GapCheck]:
    bar = check_disc_d_conditions(bundle.v_bar, settings)
    raw = check_disc_d_conditions(bundle.v, settings)
    limit = bundle.constants['limit']
    near = bar[0].estimate is not None and bar[0].estimate.trend is Trend.CONVERGES_TO \
        and abs(bar[0].estimate.limit - limit) <= settings.rel_tol * limit
    diverging = raw[0].estimate is not None and raw[0].estimate.trend is Trend.DIVERGES_TO_INFINITY
    return [
        _minorant_agreement(bundle, settings),
        GapCheck("minorant_limit", near, f"{bar[0].detail}; expected 2(L+1) = {limit:.6g}", [bar[0]]),
        GapCheck("raw_weight_diverges", diverging, raw[0].detail, [raw[0]]),
        GapCheck("raw_dyadic_bounded", raw[3].holds, raw[3].detail, [raw[3]]),
        _verdict_check("verdict_bounded", Operator.D, bundle.v, over_one_minus_r(bundle.v), Verdict.BOUNDED,
                       settings),
    ]


def _gaps_ex2(bundle: CounterexampleBundle, settings: AnalysisSettings) -> List[GapCheck]:
    raw_derivative, raw_growth = check_plane_d_conditions(bundle.v, settings)
    _, bar_growth = check_plane_d_conditions(bundle.v_bar, settings)
    diverging = raw_derivative.estimate is not None and raw_derivative.estimate.trend is Trend.DIVERGES_TO_INFINITY
    return [
        _minorant_agreement(bundle, settings),
        GapCheck("raw_derivative_diverges", diverging, raw_derivative.detail, [raw_derivative]),
        GapCheck("minorant_growth_linear", bar_growth.holds, bar_growth.detail, [bar_growth]),
        GapCheck("raw_growth_linear", raw_growth.holds, raw_growth.detail, [raw_growth]),
        _verdict_check("verdict_minorant_bounded", Operator.D, bundle.v_bar, bundle.v_bar, Verdict.BOUNDED,
                       settings),
        _verdict_check("verdict_bounded", Operator.D, bundle.v, bundle.v, Verdict.BOUNDED, settings),
    ]


def _gaps_ex3(bundle: CounterexampleBundle, settings: AnalysisSettings) -> List[GapCheck]:
    C = bundle.constants['C']
    reference = bundle.v.equivalent.weight
    p = sample_log_profile(bundle.v, settings.grid(), settings)
    gap = reference.log_profile(p.xs) - p.phis
    sandwich = bool(np.all(gap >= -1e-9 * np.maximum(1.0, np.exp(p.xs))) and np.max(gap) <= C + 1e-9)
    derivative = check_plane_i_conditions(bundle.v, settings)[0]
    decays = derivative.estimate is not None and derivative.estimate.trend is Trend.DECAYS_TO_ZERO
    return [
        GapCheck("constant_stable", bundle.constants['last_term'] <= 1e-12,
                 f"C = {C:.12g}, last summed term {bundle.constants['last_term']:.3g}"),
        GapCheck("sandwich", sandwich, f"max (e^x - phi) = {float(np.max(gap)):.6g} <= C = {C:.6g}"),
        GapCheck("liminf_decays", decays, derivative.detail, [derivative]),
        _verdict_check("verdict_reference_bounded", Operator.I, reference, reference, Verdict.BOUNDED, settings),
        _verdict_check("verdict_bounded", Operator.I, bundle.v, bundle.v, Verdict.BOUNDED, settings,
                       justification="norm_equivalent_weight"),
    ]


def _gaps_ex4(bundle: CounterexampleBundle, settings: AnalysisSettings) -> List[GapCheck]:
    integral = check_integral_condition(bundle.v, bundle.v, settings)
    derivative = check_integral_sufficiency_derivative(bundle.v, bundle.v, settings)
    return [
        GapCheck("integral_holds", integral.holds, integral.detail, [integral]),
        GapCheck("derivative_domination_fails", derivative.fails, derivative.detail, [derivative]),
        _verdict_check("verdict_bounded", Operator.I, bundle.v, bundle.v, Verdict.BOUNDED, settings),
    ]


GAP_CHECKS: Dict[str, Callable[[CounterexampleBundle, AnalysisSettings], List[GapCheck]]] = {
    'ex1': _gaps_ex1,
    'ex2': _gaps_ex2,
    'ex3': _gaps_ex3,
    'ex4': _gaps_ex4,
}


def designed_gaps(bundle: CounterexampleBundle, settings: AnalysisSettings = DEFAULT_SETTINGS) -> List[GapCheck]:
    """Re-derive every property the construction is designed to have"""
    return GAP_CHECKS[bundle.name](bundle, settings)
