#!/usr/bin/env python3
"""
Weight conditions as numerical checks
Every limsup / liminf condition is estimated on the tail windows of a
sampled log-profile and reported as Holds, Fails or Inconclusive.
"""

import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from weightlab.config import AnalysisSettings, DEFAULT_SETTINGS
from weightlab.convexity import convex_minorant, evaluate_minorant, is_log_convex
from weightlab.models import (
    AsymptoticEstimate, ConditionReport, ConditionVerdict, Confidence, EstimateKind, LogProfile, RadialWeight,
    Trend, WeightClass, WeightClassTags, Window,
    DomainMismatch, InvalidForDomain, TooFewLevels,
)
from weightlab.weights import (
    LOG2, dt_dx, merge_breakpoints, one_minus_r, over_one_minus_r, sample_log_profile, t_of_x, window_levels,
    x_of_t,
)


HOLDS = ConditionVerdict.HOLDS
FAILS = ConditionVerdict.FAILS
INCONCLUSIVE = ConditionVerdict.INCONCLUSIVE


# ---------------------------------------------------------------------------
# Tail estimation
# ---------------------------------------------------------------------------

# consecutive increments of a diverging tail may shrink by at most this factor
_MIN_INCREMENT_RATIO = 0.8


def _grows(vals: np.ndarray) -> bool:
    """Strictly increasing with non-collapsing increments (or by factors of 2)"""
    d = np.diff(vals)
    if d.size == 0 or not np.all(d > 0):
        return False
    if np.all(vals > 0) and np.all(vals[1:] >= 2.0 * vals[:-1]):
        return True
    return bool(np.all(d[1:] >= _MIN_INCREMENT_RATIO * d[:-1]) and d[-1] >= 0.5 * d[0])


def _classify(vals: np.ndarray, settings: AnalysisSettings) -> Tuple[Trend, Optional[float], Confidence]:
    last = vals[-settings.trend_window:]
    if np.any(np.isnan(last)):
        return Trend.OSCILLATING, None, Confidence.UNSTABLE
    if np.isposinf(last[-1]):
        return Trend.DIVERGES_TO_INFINITY, None, Confidence.STABLE
    if not np.all(np.isfinite(last)):
        return Trend.OSCILLATING, None, Confidence.UNSTABLE

    mean = float(last.mean())
    spread = float(last.max() - last.min())
    if spread <= max(settings.rel_tol * abs(mean), settings.abs_tol):
        return Trend.CONVERGES_TO, mean, Confidence.STABLE
    if _grows(last):
        return Trend.DIVERGES_TO_INFINITY, None, Confidence.STABLE
    if np.all(np.diff(last) < 0) and last[-1] >= 0:
        if last[-1] <= settings.abs_tol or (np.all(last > 0) and _grows(1.0 / last)):
            return Trend.DECAYS_TO_ZERO, None, Confidence.STABLE
    return Trend.OSCILLATING, None, Confidence.UNSTABLE


def _windows(values: np.ndarray, levels: np.ndarray, xs: np.ndarray, reduce) -> List[Window]:
    windows = []
    for level in np.unique(levels):
        mask = levels == level
        chunk = values[mask]
        if np.all(np.isnan(chunk)):
            extremal = math.nan
        else:
            extremal = float(reduce(chunk))
        windows.append(Window(level=int(level), x_start=float(xs[mask][0]), x_end=float(xs[mask][-1]),
                              value=extremal))
    return windows


def estimate_tail(values, levels, kind: EstimateKind, xs=None,
                  settings: AnalysisSettings = DEFAULT_SETTINGS) -> AsymptoticEstimate:
    """
    Windowed limsup / liminf / lim of sampled values.

    Windows are the distinct levels; the tail is the last max(ceil(L/2), K)
    of them and the trend is read off the last K window extremes.
    """
    values = np.asarray(values, dtype=float)
    levels = np.asarray(levels)
    xs = np.arange(values.size, dtype=float) if xs is None else np.asarray(xs, dtype=float)
    if values.shape != levels.shape or values.shape != xs.shape:
        raise ValueError("values, levels and xs must have the same shape")

    K = settings.trend_window
    present = np.unique(levels)
    if present.size < K:
        raise TooFewLevels(f"Need at least {K} tail windows, got {present.size}",
                           details={'levels': int(present.size), 'required': K})
    tail_levels = present[-max(math.ceil(present.size / 2), K):]
    mask = np.isin(levels, tail_levels)
    values, levels, xs = values[mask], levels[mask], xs[mask]

    if kind is EstimateKind.LIMIT:
        upper = _estimate_windows(values, levels, xs, EstimateKind.LIMSUP, settings)
        lower = _estimate_windows(values, levels, xs, EstimateKind.LIMINF, settings)
        return _combine_limit(upper, lower, settings)
    return _estimate_windows(values, levels, xs, kind, settings)


def _estimate_windows(values: np.ndarray, levels: np.ndarray, xs: np.ndarray, kind: EstimateKind,
                      settings: AnalysisSettings) -> AsymptoticEstimate:
    with np.errstate(invalid='ignore'):
        reduce = np.nanmax if kind is EstimateKind.LIMSUP else np.nanmin
        windows = _windows(values, levels, xs, reduce)
    trend, limit, confidence = _classify(np.array([w.value for w in windows]), settings)
    return AsymptoticEstimate(kind=kind, windows=tuple(windows), trend=trend, limit=limit, confidence=confidence)


def _combine_limit(upper: AsymptoticEstimate, lower: AsymptoticEstimate,
                   settings: AnalysisSettings) -> AsymptoticEstimate:
    """A limit exists when limsup and liminf agree"""
    if not (upper.is_stable and lower.is_stable):
        return AsymptoticEstimate(EstimateKind.LIMIT, upper.windows, Trend.OSCILLATING, None, Confidence.UNSTABLE)
    if upper.trend is lower.trend:
        if upper.trend is not Trend.CONVERGES_TO:
            return AsymptoticEstimate(EstimateKind.LIMIT, upper.windows, upper.trend, None, Confidence.STABLE)
        mean = 0.5 * (upper.limit + lower.limit)
        if abs(upper.limit - lower.limit) <= max(settings.rel_tol * abs(mean), settings.abs_tol):
            return AsymptoticEstimate(EstimateKind.LIMIT, upper.windows, Trend.CONVERGES_TO, mean, Confidence.STABLE)
    # both sides settled, on different values: no limit
    return AsymptoticEstimate(EstimateKind.LIMIT, upper.windows, Trend.OSCILLATING, None, Confidence.STABLE)


def _exp_or_inf(value: float) -> float:
    """exp that saturates at inf"""
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def _report(condition_id: str, estimate: AsymptoticEstimate, verdict: ConditionVerdict, detail: str,
            xs=None, values=None, value: Optional[float] = None, **parameters) -> ConditionReport:
    trace = None
    if xs is not None and values is not None:
        trace = (np.asarray(xs, dtype=float), np.asarray(values, dtype=float))
    return ConditionReport(condition_id=condition_id, verdict=verdict, detail=detail, estimate=estimate,
                           value=estimate.value if value is None else value,
                           parameters={k: float(v) for k, v in parameters.items()}, trace=trace)


def _bounded_verdict(estimate: AsymptoticEstimate) -> ConditionVerdict:
    """limsup < infinity"""
    if estimate.is_bounded():
        return HOLDS
    if estimate.is_unbounded():
        return FAILS
    return INCONCLUSIVE


def _positive_verdict(estimate: AsymptoticEstimate, floor: float) -> ConditionVerdict:
    """liminf > 0"""
    if not estimate.is_stable:
        return INCONCLUSIVE
    if estimate.trend is Trend.DIVERGES_TO_INFINITY:
        return HOLDS
    if estimate.trend is Trend.DECAYS_TO_ZERO:
        return FAILS
    if estimate.trend is Trend.CONVERGES_TO:
        return HOLDS if estimate.limit > floor else FAILS
    return INCONCLUSIVE


def _tail_or_inconclusive(condition_id: str, values, levels, kind: EstimateKind, xs,
                          settings: AnalysisSettings) -> Tuple[Optional[AsymptoticEstimate], Optional[ConditionReport]]:
    try:
        return estimate_tail(values, levels, kind, xs, settings), None
    except TooFewLevels as e:
        return None, ConditionReport(condition_id, INCONCLUSIVE, f"too few tail windows: {e}")


# ---------------------------------------------------------------------------
# Shared profile quantities
# ---------------------------------------------------------------------------

def _require(v: RadialWeight, disc: bool, what: str) -> None:
    if v.domain.is_disc != disc:
        raise InvalidForDomain(f"{what} needs a {'disc' if disc else 'plane'} weight",
                               details={'weight': v.label, 'domain': v.domain.name})


def boundary_slope(v: RadialWeight, xs) -> np.ndarray:
    """(1-r) v'(r) / v(r), the right slope of phi in t = log(1/(1-r))"""
    xs = np.asarray(xs, dtype=float)
    return v.log_slope(xs) / dt_dx(xs)


def _dyadic_log_values(v: RadialWeight, depth: int) -> np.ndarray:
    """phi at r = 1 - 2^-n, n = 0..depth, evaluated through the weight"""
    n = np.arange(depth + 1, dtype=float)
    with np.errstate(divide='ignore'):
        xs = x_of_t(n * LOG2)
    return v.log_profile(xs)


def _profile_depth(p: LogProfile) -> int:
    return int(math.floor(float(t_of_x(p.xs[-1])) / LOG2 + 1e-9))


def _tail_mask(levels: np.ndarray, settings: AnalysisSettings) -> np.ndarray:
    present = np.unique(levels)
    tail = present[-max(math.ceil(present.size / 2), settings.trend_window):]
    return np.isin(levels, tail)


def _level_average_slopes(u: np.ndarray, phis: np.ndarray, levels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Average slope of phi in u across each window (window start to next window start)"""
    present = np.unique(levels)
    starts = np.array([int(np.argmax(levels == lv)) for lv in present])
    ends = np.append(starts[1:], u.size - 1)
    du = u[ends] - u[starts]
    with np.errstate(divide='ignore', invalid='ignore'):
        avg = np.where(du > 0, (phis[ends] - phis[starts]) / np.where(du > 0, du, 1.0), np.nan)
    return present, avg


def _monotone_alpha(t: np.ndarray, phis: np.ndarray, increasing: bool, settings: AnalysisSettings) -> Optional[float]:
    """
    Bisection over log2(alpha) for phi - alpha t nonincreasing (or, with
    increasing=True, nondecreasing) on the given points. Returns the
    extremal feasible alpha in the search range, or None.
    """
    lo, hi = settings.menu('alpha_log2_range')
    tol = 1e-12 * np.maximum(1.0, np.abs(phis[:-1]))
    dphi, dt = np.diff(phis), np.diff(t)

    def feasible(log2_alpha: float) -> bool:
        step = dphi - (2.0 ** log2_alpha) * dt
        return bool(np.all(step >= -tol)) if increasing else bool(np.all(step <= tol))

    if increasing:
        # feasible for small alpha
        if not feasible(lo):
            return None
        if feasible(hi):
            return 2.0 ** hi
        a, b = lo, hi
        for _ in range(settings.bisection_steps):
            mid = 0.5 * (a + b)
            a, b = (mid, b) if feasible(mid) else (a, mid)
        return 2.0 ** a
    if not feasible(hi):
        return None
    if feasible(lo):
        return 2.0 ** lo
    a, b = lo, hi
    for _ in range(settings.bisection_steps):
        mid = 0.5 * (a + b)
        a, b = (a, mid) if feasible(mid) else (mid, b)
    return 2.0 ** b


def _cumulative_excursion(psi: np.ndarray, rise: bool) -> float:
    """max over s >= r of psi(s) - psi(r) (rise) or psi(r) - psi(s) (drop)"""
    if rise:
        return float(np.max(psi - np.minimum.accumulate(psi)))
    return float(np.max(np.maximum.accumulate(psi) - psi))


# ---------------------------------------------------------------------------
# Differentiation on the disc
# ---------------------------------------------------------------------------

def _shift_delta(xs: np.ndarray, delta: float) -> np.ndarray:
    """log of (r + delta)/(1 + delta r) for r = e^x"""
    r = np.exp(xs)
    return np.log1p(-one_minus_r(xs) * (1.0 - delta) / (1.0 + delta * r))


def _delta_gaps(v: RadialWeight, p: LogProfile, delta: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi(x') - phi(x) on the grid points whose shifted point stays on the grid"""
    shifted = _shift_delta(p.xs, delta)
    keep = t_of_x(shifted) <= t_of_x(p.xs[-1])
    gaps = v.log_profile(shifted[keep]) - p.phis[keep]
    return p.xs[keep], gaps, p.levels[keep]


def _power_gaps(v: RadialWeight, p: LogProfile, gamma: float) -> np.ndarray:
    """phi(x) - phi(gamma x), i.e. log v(r)/v(r^gamma)"""
    return p.phis - v.log_profile(gamma * p.xs)


def check_disc_d_conditions(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> List[ConditionReport]:
    """
    The six equivalent-for-log-convex conditions for D: H_v -> H_{v/(1-r)}
    on the disc. Each report stands on its own numerics.
    """
    _require(v, True, "Disc differentiation conditions")
    p = sample_log_profile(v, settings.grid(), settings)
    t = t_of_x(p.xs)
    reports = []

    # (i) limsup (1-r) v'/v
    slope_t = boundary_slope(v, p.xs)
    est, failed = _tail_or_inconclusive("disc_d.i", slope_t, p.levels, EstimateKind.LIMSUP, p.xs, settings)
    reports.append(failed or _report("disc_d.i", est, _bounded_verdict(est),
                                     f"(1-r)v'/v: {est.describe()}", p.xs, slope_t))

    # (ii) (1-r)^alpha v eventually decreasing
    mask = _tail_mask(p.levels, settings)
    dq = np.append(np.diff(p.phis) / np.diff(t), np.nan)
    est, failed = _tail_or_inconclusive("disc_d.ii", dq, p.levels, EstimateKind.LIMSUP, p.xs, settings)
    if failed:
        reports.append(failed)
    else:
        alpha = _monotone_alpha(t[mask], p.phis[mask], increasing=False, settings=settings)
        if alpha is not None:
            verdict, detail = HOLDS, f"(1-r)^a v nonincreasing on the tail for a = {alpha:.6g}"
        elif est.is_unbounded():
            verdict, detail = FAILS, "difference quotients in t are unbounded; no alpha works"
        elif est.is_bounded():
            alpha = float(np.nanmax(dq[mask]))
            verdict, detail = HOLDS, f"alpha = {alpha:.6g} lies above the search range"
        else:
            verdict, detail = INCONCLUSIVE, f"no alpha in the search range; quotients {est.describe()}"
        reports.append(_report("disc_d.ii", est, verdict, detail, p.xs, dq, value=alpha,
                               **({'alpha': alpha} if alpha is not None else {})))

    # (iii) (1-r)^alpha v almost decreasing
    present, avg = _level_average_slopes(t, p.phis, p.levels)
    est, failed = _tail_or_inconclusive("disc_d.iii", avg, present, EstimateKind.LIMSUP, None, settings)
    if failed:
        reports.append(failed)
    else:
        verdict = _bounded_verdict(est)
        params = {}
        if verdict is HOLDS:
            alpha = max(est.value * (1.0 + settings.rel_tol), 2.0 ** settings.menu('alpha_log2_range')[0])
            params = {'alpha': alpha, 'C': _cumulative_excursion(p.phis[mask] - alpha * t[mask], rise=True)}
        reports.append(_report("disc_d.iii", est, verdict, f"window-average growth in t: {est.describe()}",
                               **params))

    # (iv) sup v(1-2^-n-1)/v(1-2^-n)
    depth = _profile_depth(p)
    dyadic = _dyadic_log_values(v, depth)
    gaps = np.diff(dyadic)
    est, failed = _tail_or_inconclusive("disc_d.iv", gaps, np.arange(gaps.size), EstimateKind.LIMSUP, None, settings)
    if failed:
        reports.append(failed)
    else:
        sup_ratio = _exp_or_inf(float(np.max(gaps)))
        reports.append(_report("disc_d.iv", est, _bounded_verdict(est),
                               f"dyadic log-gaps {est.describe()}, sup ratio {sup_ratio:.6g}",
                               np.arange(gaps.size, dtype=float), gaps, value=sup_ratio, sup_ratio=sup_ratio))

    # (v) v((r+d)/(1+dr)) = O(v(r)) for some d
    outcomes = []
    for delta in settings.menu('delta'):
        xs_d, gaps_d, levels_d = _delta_gaps(v, p, delta)
        est, failed = _tail_or_inconclusive("disc_d.v", gaps_d, levels_d, EstimateKind.LIMSUP, xs_d, settings)
        if failed:
            continue
        outcomes.append((delta, est, _bounded_verdict(est), xs_d, gaps_d))
    reports.append(_menu_report("disc_d.v", 'delta', outcomes, "shifted log-gap",
                                lambda e: _exp_or_inf(e.value) if e.is_bounded() else e.value))

    # (vi) v(r) = O(v(r^2))
    gaps2 = _power_gaps(v, p, 2.0)
    est, failed = _tail_or_inconclusive("disc_d.vi", gaps2, p.levels, EstimateKind.LIMSUP, p.xs, settings)
    if failed:
        reports.append(failed)
    else:
        value = _exp_or_inf(est.value) if est.is_bounded() else est.value
        reports.append(_report("disc_d.vi", est, _bounded_verdict(est), f"log v(r)/v(r^2): {est.describe()}",
                               p.xs, gaps2, value=value))
    return reports


def _menu_report(condition_id: str, name: str, outcomes, what: str, scale) -> ConditionReport:
    """Existence over a small menu: Holds on the first hit, Fails only if every entry fails"""
    if not outcomes:
        return ConditionReport(condition_id, INCONCLUSIVE, f"no {name} in the menu had enough tail windows")
    for param, est, verdict, xs, values in outcomes:
        if verdict is HOLDS:
            return _report(condition_id, est, HOLDS, f"{what} with {name} = {param:g}: {est.describe()}",
                           xs, values, value=scale(est), **{name: param})
    if all(verdict is FAILS for _, _, verdict, _, _ in outcomes):
        param, est, _, xs, values = outcomes[-1]
        return _report(condition_id, est, FAILS, f"{what} fails for every {name} in the menu",
                       xs, values, value=scale(est), **{name: param})
    param, est, _, xs, values = outcomes[-1]
    return ConditionReport(condition_id, INCONCLUSIVE, f"{what}: no {name} in the menu settles the question",
                           value=None, parameters={name: float(param)}, trace=(xs, values))


# ---------------------------------------------------------------------------
# Differentiation and integration on the plane
# ---------------------------------------------------------------------------

def check_plane_d_conditions(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> List[ConditionReport]:
    """limsup v'/v and limsup log v(r)/r"""
    _require(v, False, "Plane differentiation conditions")
    p = sample_log_profile(v, settings.grid(), settings)
    reports = []

    ratio = v.log_slope(p.xs) * np.exp(-p.xs)
    est, failed = _tail_or_inconclusive("plane_d.derivative", ratio, p.levels, EstimateKind.LIMSUP, p.xs, settings)
    reports.append(failed or _report("plane_d.derivative", est, _bounded_verdict(est), f"v'/v: {est.describe()}",
                                     p.xs, ratio))

    growth = p.phis * np.exp(-p.xs)
    est, failed = _tail_or_inconclusive("plane_d.growth", growth, p.levels, EstimateKind.LIMSUP, p.xs, settings)
    reports.append(failed or _report("plane_d.growth", est, _bounded_verdict(est), f"log v(r)/r: {est.describe()}",
                                     p.xs, growth))
    return reports


def check_plane_i_conditions(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> List[ConditionReport]:
    """liminf v'/v > 0 and the integral condition with w = v"""
    _require(v, False, "Plane integration conditions")
    p = sample_log_profile(v, settings.grid(), settings)

    ratio = v.log_slope(p.xs) * np.exp(-p.xs)
    est, failed = _tail_or_inconclusive("plane_i.derivative", ratio, p.levels, EstimateKind.LIMINF, p.xs, settings)
    first = failed or _report("plane_i.derivative", est, _positive_verdict(est, settings.positivity_floor),
                              f"v'/v: {est.describe()}", p.xs, ratio)
    integral = check_integral_condition(v, v, settings)
    integral.condition_id = "plane_i.integral"
    return [first, integral]


# ---------------------------------------------------------------------------
# Integral condition
# ---------------------------------------------------------------------------

def _log_panels(du: np.ndarray, g0: np.ndarray, g1: np.ndarray) -> np.ndarray:
    """log of the integral of exp(linear) over each panel: log du + g0 + log(expm1(dg)/dg)"""
    dg = g1 - g0
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        pos = dg + np.log(-np.expm1(-np.abs(dg))) - np.log(np.abs(dg))
        neg = np.log(-np.expm1(-np.abs(dg))) - np.log(np.abs(dg))
        factor = np.where(np.abs(dg) < 1e-8, 0.5 * dg, np.where(dg > 0, pos, neg))
        return np.log(du) + g0 + factor


def log_cumulative_integral(w: RadialWeight, xs: np.ndarray) -> np.ndarray:
    """
    log of the integral of w from 0 to r = e^{xs[i]}, for every grid point.
    Disc integrals run in t (integrand exp(phi_w - t)), plane integrals in r.
    Log w is interpolated linearly in the integration variable.
    """
    if w.domain.is_disc:
        u = t_of_x(xs)
        g = w.log_profile(xs) - u
        origin_g = w.log_at_origin()
    else:
        u = np.exp(xs)
        g = w.log_profile(xs)
        origin_g = w.log_at_origin()

    if math.isfinite(origin_g):
        u = np.concatenate([[0.0], u])
        g = np.concatenate([[origin_g], g])
        panels = _log_panels(np.diff(u), g[:-1], g[1:])
        return np.logaddexp.accumulate(panels)
    panels = _log_panels(np.diff(u), g[:-1], g[1:])
    return np.concatenate([[-np.inf], np.logaddexp.accumulate(panels)])


def check_integral_condition(w: RadialWeight, v: RadialWeight,
                             settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """limsup (1/v(r)) * integral_0^r w; bounded means I: H_w -> H_v is continuous"""
    if w.domain != v.domain:
        raise DomainMismatch("Integral condition needs weights on the same domain",
                             details={'w': w.label, 'v': v.label})
    p = sample_log_profile(v, settings.grid(), settings)
    xs = merge_breakpoints(p.xs, w.breakpoints)
    levels = window_levels(v, xs)
    log_ratio = log_cumulative_integral(w, xs) - v.log_profile(xs)
    with np.errstate(over='ignore'):
        ratio = np.exp(log_ratio)

    est, failed = _tail_or_inconclusive("integral", ratio, levels, EstimateKind.LIMSUP, xs, settings)
    if failed:
        return failed
    return _report("integral", est, _bounded_verdict(est),
                   f"(1/v) * int_0^r w for w = {w.label}: {est.describe()}", xs, ratio,
                   sup=float(np.max(ratio)))


def check_integral_sufficiency_derivative(w: RadialWeight, v: RadialWeight,
                                          settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """limsup w(r)/v'(r) < infinity, which implies the integral condition"""
    if w.domain != v.domain:
        raise DomainMismatch("Derivative domination needs weights on the same domain")
    p = sample_log_profile(v, settings.grid(), settings)
    xs = merge_breakpoints(p.xs, w.breakpoints)
    levels = window_levels(v, xs)
    slope = v.log_slope(xs)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        ratio = np.where(slope > 0, np.exp(w.log_profile(xs) - v.log_profile(xs) + xs) / slope, np.inf)
    est, failed = _tail_or_inconclusive("integral_derivative", ratio, levels, EstimateKind.LIMSUP, xs, settings)
    if failed:
        return failed
    return _report("integral_derivative", est, _bounded_verdict(est), f"w/v': {est.describe()}", xs, ratio)


# ---------------------------------------------------------------------------
# Integration on the disc
# ---------------------------------------------------------------------------

def check_disc_i_conditions(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> List[ConditionReport]:
    """
    The seven equivalent-for-log-convex conditions for I: H_{v/(1-r)} -> H_v
    on the disc, mirroring check_disc_d_conditions with liminf in place of limsup.
    """
    _require(v, True, "Disc integration conditions")
    floor = settings.positivity_floor
    p = sample_log_profile(v, settings.grid(), settings)
    t = t_of_x(p.xs)
    reports = []

    # (i) liminf (1-r) v'/v > 0
    slope_t = boundary_slope(v, p.xs)
    est, failed = _tail_or_inconclusive("disc_i.i", slope_t, p.levels, EstimateKind.LIMINF, p.xs, settings)
    reports.append(failed or _report("disc_i.i", est, _positive_verdict(est, floor),
                                     f"(1-r)v'/v: {est.describe()}", p.xs, slope_t))

    # (ii) (1-r)^alpha v eventually increasing
    mask = _tail_mask(p.levels, settings)
    dq = np.append(np.diff(p.phis) / np.diff(t), np.nan)
    est, failed = _tail_or_inconclusive("disc_i.ii", dq, p.levels, EstimateKind.LIMINF, p.xs, settings)
    if failed:
        reports.append(failed)
    else:
        positive = _positive_verdict(est, floor)
        alpha = _monotone_alpha(t[mask], p.phis[mask], increasing=True, settings=settings) \
            if positive is not FAILS else None
        if positive is FAILS:
            verdict, detail = FAILS, f"difference quotients in t: {est.describe()}"
        elif alpha is not None:
            verdict, detail = HOLDS, f"(1-r)^-a v nondecreasing on the tail for a = {alpha:.6g}"
        else:
            verdict, detail = INCONCLUSIVE, f"no alpha in the search range; quotients {est.describe()}"
        reports.append(_report("disc_i.ii", est, verdict, detail, p.xs, dq, value=alpha,
                               **({'alpha': alpha} if alpha is not None else {})))

    # (iii) (1-r)^-alpha v almost increasing
    present, avg = _level_average_slopes(t, p.phis, p.levels)
    est, failed = _tail_or_inconclusive("disc_i.iii", avg, present, EstimateKind.LIMINF, None, settings)
    if failed:
        reports.append(failed)
    else:
        verdict = _positive_verdict(est, floor)
        params = {}
        if verdict is HOLDS:
            alpha = float(np.nanmin([w.value for w in est.windows])) * (1.0 - settings.rel_tol)
            params = {'alpha': alpha, 'C': _cumulative_excursion(p.phis[mask] - alpha * t[mask], rise=False)}
        reports.append(_report("disc_i.iii", est, verdict, f"window-average growth in t: {est.describe()}",
                               **params))

    # (iv) limsup v(1-2^-n)/v(1-2^-n-k) < 1 for some k
    depth = _profile_depth(p)
    dyadic = _dyadic_log_values(v, depth)
    outcomes = []
    for k in settings.menu('k'):
        if depth - k + 1 < settings.trend_window:
            continue
        gaps = dyadic[k:] - dyadic[:-k]
        est, failed = _tail_or_inconclusive("disc_i.iv", gaps, np.arange(gaps.size), EstimateKind.LIMINF,
                                            None, settings)
        if failed:
            continue
        outcomes.append((k, est, _positive_verdict(est, settings.contraction_margin),
                         np.arange(gaps.size, dtype=float), gaps))
    reports.append(_menu_report("disc_i.iv", 'k', outcomes, "dyadic contraction", _contraction_ratio))

    # (v) strict contraction under the delta shift
    outcomes = []
    for delta in settings.menu('delta'):
        xs_d, gaps_d, levels_d = _delta_gaps(v, p, delta)
        est, failed = _tail_or_inconclusive("disc_i.v", gaps_d, levels_d, EstimateKind.LIMINF, xs_d, settings)
        if failed:
            continue
        outcomes.append((delta, est, _positive_verdict(est, settings.contraction_margin), xs_d, gaps_d))
    reports.append(_menu_report("disc_i.v", 'delta', outcomes, "shift contraction", _contraction_ratio))

    # (vi) limsup v(r^gamma)/v(r) < 1 for some gamma
    outcomes = []
    for gamma in settings.menu('gamma'):
        gaps = _power_gaps(v, p, gamma)
        est, failed = _tail_or_inconclusive("disc_i.vi", gaps, p.levels, EstimateKind.LIMINF, p.xs, settings)
        if failed:
            continue
        outcomes.append((gamma, est, _positive_verdict(est, settings.contraction_margin), p.xs, gaps))
    reports.append(_menu_report("disc_i.vi", 'gamma', outcomes, "power contraction", _contraction_ratio))

    # (vii) integral condition with w = v/(1-r)
    integral = check_integral_condition(over_one_minus_r(v), v, settings)
    integral.condition_id = "disc_i.vii"
    reports.append(integral)
    return reports


def _contraction_ratio(estimate: AsymptoticEstimate) -> float:
    """limsup of the ratio for a liminf log-gap estimate"""
    if estimate.trend is Trend.CONVERGES_TO:
        return _exp_or_inf(-estimate.limit)
    if estimate.trend is Trend.DIVERGES_TO_INFINITY:
        return 0.0
    if estimate.trend is Trend.DECAYS_TO_ZERO:
        return 1.0
    return math.nan


# ---------------------------------------------------------------------------
# Single conditions
# ---------------------------------------------------------------------------

def check_log_domination(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """log(1/(1-r)) = O(log v(r))"""
    _require(v, True, "Log domination")
    p = sample_log_profile(v, settings.grid(), settings)
    t = t_of_x(p.xs)
    with np.errstate(divide='ignore'):
        ratio = np.where(p.phis > 0, t / np.where(p.phis > 0, p.phis, 1.0), np.inf)
    est, failed = _tail_or_inconclusive("log_domination", ratio, p.levels, EstimateKind.LIMSUP, p.xs, settings)
    if failed:
        return failed
    return _report("log_domination", est, _bounded_verdict(est), f"t / log v: {est.describe()}", p.xs, ratio)


def _sandwich_bounded(values: np.ndarray, levels: np.ndarray, xs: np.ndarray,
                      settings: AnalysisSettings) -> Tuple[bool, float]:
    """exp(values) bounded on the tail, and the sup of values over the whole grid"""
    with np.errstate(over='ignore'):
        est = estimate_tail(np.exp(values), levels, EstimateKind.LIMSUP, xs, settings)
    return est.is_bounded(), float(np.max(values))


def check_epimorphism_plane(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """(1/A) e^{r/C} <= v(r) <= A e^{Cr} for the smallest C in the menu"""
    _require(v, False, "Sandwich check")
    p = sample_log_profile(v, settings.grid(), settings)
    r = np.exp(p.xs)
    origin = p.origin if p.origin is not None else p.phis[0]
    try:
        for C in settings.menu('sandwich'):
            upper_ok, upper_sup = _sandwich_bounded(p.phis - C * r, p.levels, p.xs, settings)
            lower_ok, lower_sup = _sandwich_bounded(r / C - p.phis, p.levels, p.xs, settings)
            if upper_ok and lower_ok:
                log_a = max(upper_sup, lower_sup, origin, -origin, 0.0)
                return ConditionReport("sandwich", HOLDS, f"sandwich holds with C = {C:g}, log A = {log_a:.6g}",
                                       value=log_a, parameters={'C': float(C), 'log_A': float(log_a)})
    except TooFewLevels as e:
        return ConditionReport("sandwich", INCONCLUSIVE, f"too few tail windows: {e}")
    return ConditionReport("sandwich", FAILS, "no C in the menu gives both sandwich bounds",
                           parameters={'C_max': float(settings.menu('sandwich')[-1])})


def _log_convex_surrogate(v: RadialWeight, p: LogProfile) -> Tuple[np.ndarray, np.ndarray, bool]:
    """phi_bar and its right x-slope on p's grid: exact when v is log-convex, else the hull"""
    if is_log_convex(p)[0]:
        return p.phis, v.log_slope(p.xs), True
    q = convex_minorant(p)
    idx = np.clip(np.searchsorted(q.breakpoints, p.xs, side='right') - 1, 0, q.segments - 1)
    return evaluate_minorant(q, p.xs), q.slopes[idx], False


def check_necessary_derivative_bound(v: RadialWeight, w: RadialWeight,
                                     settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """
    limsup v_bar'(r)/w(r), with v_bar = exp of the convex minorant of log v
    standing in for the associated weight. Unbounded means D: H_v -> H_w is
    not bounded, up to that surrogate.
    """
    if w.domain != v.domain:
        raise DomainMismatch("Necessary bound needs weights on the same domain")
    p = sample_log_profile(v, settings.grid(), settings)
    phi_bar, slope_bar, exact = _log_convex_surrogate(v, p)
    with np.errstate(over='ignore', invalid='ignore'):
        ratio = np.exp(phi_bar - w.log_profile(p.xs) - p.xs) * slope_bar
    est, failed = _tail_or_inconclusive("derivative_necessary", ratio, p.levels, EstimateKind.LIMSUP, p.xs, settings)
    if failed:
        return failed
    surrogate = "v itself (log-convex)" if exact else "exp of the convex minorant of log v"
    return _report("derivative_necessary", est, _bounded_verdict(est),
                   f"v_bar'/w with v_bar = {surrogate}: {est.describe()}", p.xs, ratio)


def check_epimorphism_disc(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """0 < liminf (1-r)v'/v and limsup (1-r)v'/v < infinity"""
    _require(v, True, "Disc surjectivity check")
    p = sample_log_profile(v, settings.grid(), settings)
    slope_t = boundary_slope(v, p.xs)
    upper, failed = _tail_or_inconclusive("disc_epimorphism", slope_t, p.levels, EstimateKind.LIMSUP, p.xs, settings)
    if failed:
        return failed
    lower = estimate_tail(slope_t, p.levels, EstimateKind.LIMINF, p.xs, settings)
    up, low = _bounded_verdict(upper), _positive_verdict(lower, settings.positivity_floor)
    if up is HOLDS and low is HOLDS:
        verdict = HOLDS
    elif FAILS in (up, low):
        verdict = FAILS
    else:
        verdict = INCONCLUSIVE
    return ConditionReport("disc_epimorphism", verdict,
                           f"limsup {upper.describe()}; liminf {lower.describe()}",
                           value=upper.value, parameters={'liminf': lower.value, 'limsup': upper.value},
                           trace=(p.xs, slope_t))


def check_plane_derivative_growth_bound(v: RadialWeight,
                                        settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """limsup v'/v <= e * limsup log v(r)/r for log-convex v"""
    _require(v, False, "Derivative growth bound")
    p = sample_log_profile(v, settings.grid(), settings)
    if not is_log_convex(p)[0]:
        return ConditionReport("plane_d.growth_bound", INCONCLUSIVE, "bound only applies to log-convex weights")
    derivative, growth = check_plane_d_conditions(v, settings)
    if derivative.estimate is None or growth.estimate is None or \
            not (derivative.estimate.is_stable and growth.estimate.is_stable):
        return ConditionReport("plane_d.growth_bound", INCONCLUSIVE, "one side has no stable estimate")
    lhs, rhs = derivative.estimate.value, growth.estimate.value
    if math.isinf(rhs):
        verdict = HOLDS
    elif math.isinf(lhs):
        verdict = FAILS
    else:
        verdict = HOLDS if lhs <= math.e * rhs * (1.0 + settings.rel_tol) + settings.abs_tol else FAILS
    return ConditionReport("plane_d.growth_bound", verdict, f"limsup v'/v = {lhs:.6g}, e * limsup log v/r = "
                                                           f"{math.e * rhs:.6g}",
                           value=lhs, parameters={'derivative': lhs, 'growth': rhs})


def implied_norm_floor(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """
    Smallest dilation C in the menu with log mu(t/C) - log v(r) bounded on the
    tail, mu being the maximum term of e^z = sum of the iterated integrals of 1.
    """
    from weightlab.operators import maximum_term

    _require(v, True, "Iterated-integral floor")
    p = sample_log_profile(v, settings.grid(), settings)
    t = t_of_x(p.xs)
    try:
        for C in settings.menu('sandwich'):
            log_mu = np.array([maximum_term(tt / C)[0] for tt in t])
            ok, sup = _sandwich_bounded(log_mu - p.phis, p.levels, p.xs, settings)
            if ok:
                return ConditionReport("iterated_integral_floor", HOLDS,
                                       f"iterated integrals stay dominated with dilation C = {C:g}",
                                       value=float(C), parameters={'C': float(C), 'log_constant': sup})
    except TooFewLevels as e:
        return ConditionReport("iterated_integral_floor", INCONCLUSIVE, f"too few tail windows: {e}")
    return ConditionReport("iterated_integral_floor", FAILS, "no dilation in the menu dominates the iterated integrals")


def check_regularity(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """lim (1-r)v'/v =: L_v exists (+inf and 0 allowed)"""
    _require(v, True, "Regularity")
    p = sample_log_profile(v, settings.grid(), settings)
    slope_t = boundary_slope(v, p.xs)
    est, failed = _tail_or_inconclusive("regularity", slope_t, p.levels, EstimateKind.LIMIT, p.xs, settings)
    if failed:
        return failed
    if est.is_stable and est.trend is not Trend.OSCILLATING:
        return _report("regularity", est, HOLDS, f"L_v = {est.value:.6g}", p.xs, slope_t, L_v=est.value)
    verdict = FAILS if est.is_stable else INCONCLUSIVE
    return _report("regularity", est, verdict, "limsup and liminf of (1-r)v'/v differ", p.xs, slope_t)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def _dilation_gap_report(condition_id: str, xs: np.ndarray, omega: Callable[[np.ndarray], np.ndarray],
                         shift: Callable[[np.ndarray, float], np.ndarray], limit_mask: Callable[[np.ndarray], np.ndarray],
                         settings: AnalysisSettings) -> ConditionReport:
    """omega nondecreasing and omega(shift(x, c)) - omega(x) >= 1 for some c in the dilation menu"""
    values = omega(xs)
    if not np.all(np.isfinite(values)):
        return ConditionReport(condition_id, INCONCLUSIVE, "slope function not finite on the grid")
    tol = 1e-9 * np.maximum(1.0, np.abs(values[:-1]))
    if np.any(np.diff(values) < -tol):
        return ConditionReport(condition_id, FAILS, "slope function is not nondecreasing")
    for c in settings.menu('dilation'):
        shifted = shift(xs, c)
        keep = limit_mask(shifted)
        if np.count_nonzero(keep) < 2:
            continue
        gap = omega(shifted[keep]) - values[keep]
        if np.all(gap >= 1.0 - 1e-9):
            return ConditionReport(condition_id, HOLDS, f"dilation gap >= 1 with c = {c:g}",
                                   value=float(np.min(gap)), parameters={'c': float(c)},
                                   trace=(xs[keep], gap))
    return ConditionReport(condition_id, FAILS, "no dilation in the menu gains 1")


def classify_weight(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> WeightClassTags:
    """Membership in the weight classes, each with the report that decided it"""
    p = sample_log_profile(v, settings.grid(), settings)
    flags = set()
    evidence: Dict[str, ConditionReport] = {}

    convex, violation = is_log_convex(p)
    evidence[WeightClass.LOG_CONVEX.value] = ConditionReport(
        "log_convex", HOLDS if convex else FAILS, f"largest slope drop {violation:.3g}", value=violation)
    if convex:
        flags.add(WeightClass.LOG_CONVEX)

    regular_limit = None
    if v.domain.is_disc:
        moderate = check_disc_d_conditions(v, settings)[3]
        evidence[WeightClass.MODERATE_GROWTH.value] = moderate
        if moderate.holds:
            flags.add(WeightClass.MODERATE_GROWTH)
        if 'rapidly_growing' in v.tags:
            flags.add(WeightClass.RAPIDLY_GROWING)
            evidence[WeightClass.RAPIDLY_GROWING.value] = ConditionReport(
                "rapidly_growing", HOLDS, "built by the dyadic-linear generator")
        if convex and (WeightClass.MODERATE_GROWTH in flags or WeightClass.RAPIDLY_GROWING in flags):
            flags.add(WeightClass.H_WEIGHT)

        t_max = float(t_of_x(p.xs[-1]))
        bbt = _dilation_gap_report(
            "bbt", t_of_x(p.xs), lambda t: boundary_slope(v, x_of_t(t)),
            lambda t, c: t + math.log(c), lambda t: t <= t_max, settings)
        evidence[WeightClass.BBT_WEIGHT.value] = bbt
        if bbt.holds:
            flags.add(WeightClass.BBT_WEIGHT)

        regular = check_regularity(v, settings)
        evidence[WeightClass.REGULAR.value] = regular
        if regular.holds:
            flags.add(WeightClass.REGULAR)
            regular_limit = regular.value
    else:
        x_max = float(p.xs[-1])
        tail = p.xs[p.xs >= 0.0]
        if convex and tail.size >= 2:
            ck = _dilation_gap_report("ck", tail, v.log_slope, lambda x, c: x + math.log(c),
                                      lambda x: x <= x_max, settings)
        else:
            ck = ConditionReport("ck", FAILS if not convex else INCONCLUSIVE,
                                 "needs a log-convex weight" if not convex else "grid does not reach r >= 1")
        evidence[WeightClass.CK_WEIGHT.value] = ck
        if ck.holds:
            flags.add(WeightClass.CK_WEIGHT)

    hl = check_hl_condition(v, settings=settings)
    evidence[WeightClass.HL_CONDITION.value] = hl
    if hl.holds:
        flags.add(WeightClass.HL_CONDITION)

    return WeightClassTags(flags=frozenset(flags), regular_limit=regular_limit, evidence=evidence)


def default_n_grid(p: LogProfile, settings: AnalysisSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Log-spaced n spanning the positive slopes of the profile, four per grid step"""
    slopes = np.diff(p.phis) / np.diff(p.xs)
    positive = slopes[slopes > 0]
    if positive.size == 0:
        return np.array([1.0])
    ratio = math.exp(LOG2 / settings.points_per_level / 4.0)
    lo, hi = float(positive.min()) / math.e, float(positive.max()) * math.e
    count = int(math.ceil(math.log(hi / lo) / math.log(ratio))) + 1
    return lo * ratio ** np.arange(count)


def check_hl_condition(v: RadialWeight, n_grid: Optional[Sequence[float]] = None,
                       settings: AnalysisSettings = DEFAULT_SETTINGS) -> ConditionReport:
    """
    Heuristic: every grid radius should be a global maximizer of r^n/v(r)
    for some sampled n. Uncovered runs of 3 or more grid points fail.
    """
    p = sample_log_profile(v, settings.grid(), settings)
    ns = default_n_grid(p, settings) if n_grid is None else np.asarray(list(n_grid), dtype=float)
    if ns.size < 2:
        return ConditionReport("hl", INCONCLUSIVE, "heuristic: a single n cannot cover the grid",
                               parameters={'n_count': float(ns.size)})

    covered = np.zeros(p.size, dtype=bool)
    for chunk in np.array_split(ns, max(1, ns.size // 256)):
        scores = chunk[:, None] * p.xs[None, :] - p.phis[None, :]
        best = scores.max(axis=1, keepdims=True)
        covered |= np.any(scores >= best - 1e-12 * np.maximum(1.0, np.abs(best)), axis=0)

    runs, longest = 0, 0
    for hit in covered:
        runs = 0 if hit else runs + 1
        longest = max(longest, runs)
    detail = (f"heuristic over {ns.size} sampled n in [{ns.min():.3g}, {ns.max():.3g}]: "
              f"longest uncovered run {longest} grid points")
    if longest <= 1:
        verdict = HOLDS
    elif longest >= 3:
        verdict = FAILS
    else:
        verdict = INCONCLUSIVE
    return ConditionReport("hl", verdict, detail, value=float(longest),
                           parameters={'n_count': float(ns.size), 'longest_gap': float(longest)},
                           trace=(p.xs, covered.astype(float)))
