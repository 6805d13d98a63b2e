#!/usr/bin/env python3
"""
Log-convexification and the discrete Legendre transform
Lower convex hull of a sampled log-profile, convexity testing, the monomial
norms A_n = sup_x (n x - phi(x)) and the monomial lower envelope of the
associated weight.
"""

import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from weightlab.config import AnalysisSettings, DEFAULT_SETTINGS
from weightlab.models import (
    LogProfile, MonomialNorms, PiecewiseLinearConvex, RadialWeight,
    DegenerateProfile, MaximizerAtBoundary, OutOfRange,
)
from weightlab.weights import make_piecewise, sample_log_profile, t_of_x, x_of_t


def _signed_area(x0, y0, x1, y1, x2, y2) -> float:
    """Twice the signed area of the triangle; <= 0 means (x1, y1) is not below the chord"""
    return (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)


def convex_minorant(p: LogProfile) -> PiecewiseLinearConvex:
    """Largest convex minorant of the sampled phi (monotone-chain lower hull)"""
    if p.size < 2:
        raise DegenerateProfile("Convex minorant needs at least two points", details={'points': p.size})

    xs, ys = p.xs, p.phis
    hull = [0, 1]
    for i in range(2, p.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if _signed_area(xs[a], ys[a], xs[b], ys[b], xs[i], ys[i]) <= 0:
                hull.pop()
            else:
                break
        hull.append(i)

    idx = np.asarray(hull)
    breakpoints = xs[idx].copy()
    values = ys[idx].copy()
    slopes = np.diff(values) / np.diff(breakpoints)
    return PiecewiseLinearConvex(breakpoints=breakpoints, values=values, slopes=slopes)


def evaluate_minorant(q: PiecewiseLinearConvex, xs) -> np.ndarray:
    """q at xs; continued linearly past both ends"""
    xs = np.asarray(xs, dtype=float)
    inside = np.interp(xs, q.breakpoints, q.values)
    left = q.values[0] + q.slopes[0] * (xs - q.breakpoints[0])
    right = q.values[-1] + q.slopes[-1] * (xs - q.breakpoints[-1])
    return np.where(xs < q.breakpoints[0], left, np.where(xs > q.breakpoints[-1], right, inside))


def minorant_profile(p: LogProfile) -> LogProfile:
    """The convex minorant sampled back onto p's grid"""
    q = convex_minorant(p)
    return LogProfile(xs=p.xs, phis=evaluate_minorant(q, p.xs), domain=p.domain, levels=p.levels,
                      origin=p.origin, source=None)


def minorant_weight(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> RadialWeight:
    """Piecewise weight exp(phi_bar) built from the hull of v's sampled profile"""
    p = sample_log_profile(v, settings.grid(), settings)
    q = convex_minorant(p)
    horizon = v.horizon if v.horizon is not None else float(p.xs[-1])
    return make_piecewise(q.breakpoints, q.values, v.domain, label=f"minorant[{v.label}]",
                          level_breaks=v.level_breaks, horizon=horizon)


def is_log_convex(p: LogProfile, tol: float = 1e-9) -> Tuple[bool, float]:
    """
    Whether the difference-quotient slopes of phi are nondecreasing.
    A drop s_i - s_{i+1} counts once it exceeds tol * max(1, |s_i|); the
    returned violation is the largest absolute drop.
    """
    if p.size < 2:
        raise DegenerateProfile("Convexity test needs at least two points", details={'points': p.size})
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if p.size == 2:
        return True, 0.0

    slopes = np.diff(p.phis) / np.diff(p.xs)
    drops = slopes[:-1] - slopes[1:]
    violating = drops > tol * np.maximum(1.0, np.abs(slopes[:-1]))
    max_violation = float(max(drops.max(), 0.0))
    return (not bool(np.any(violating))), max_violation


def _natural_variable(p: LogProfile):
    """Maps between x and the variable the grid is uniform in"""
    if p.domain.is_disc:
        return t_of_x, x_of_t
    return (lambda x: x), (lambda u: u)


def _refine(p: LogProfile, n: int, i: int, value: float) -> Tuple[float, float]:
    """Polish a grid maximizer of n x - phi(x) between its neighbours"""
    w = p.source
    lo, hi = max(i - 1, 0), min(i + 1, p.size - 1)
    if w is None or not w.smooth or lo == hi:
        return value, float(p.xs[i])
    to_u, to_x = _natural_variable(p)
    u_lo, u_hi = float(to_u(p.xs[lo])), float(to_u(p.xs[hi]))

    def objective(u):
        x = float(to_x(u))
        return -(n * x - float(w.log_profile(np.array([x]))[0]))

    res = minimize_scalar(objective, bounds=(u_lo, u_hi), method='bounded', options={'xatol': 1e-12})
    if res.success and math.isfinite(res.fun) and -res.fun > value:
        return float(-res.fun), float(to_x(res.x))
    return value, float(p.xs[i])


def monomial_log_norms(p: LogProfile, N: int, refine: bool = False, on_boundary: str = 'raise') -> MonomialNorms:
    """
    A_n = log ||z^n||_v = sup_x (n x - phi(x)) for n = 0..N.

    Convex profiles locate the maximizer by bisection on the segment slopes,
    other profiles by a full scan. A_0 also sees r = 0 (value -log v(0)).
    On the plane a maximizer on the last grid point raises
    MaximizerAtBoundary unless on_boundary='flag'; on the disc it is flagged
    as grid-limited. A_n is the grid maximum unless refine=True, which
    searches between grid points for weights with a smooth closed form.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    if p.size < 2:
        raise DegenerateProfile("Monomial norms need at least two grid points")

    ns = np.arange(N + 1)
    convex, _ = is_log_convex(p)
    if convex:
        slopes = np.diff(p.phis) / np.diff(p.xs)
        idx = np.searchsorted(slopes, ns.astype(float), side='left')
        # rounding can leave the slopes a hair out of order; settle ties among neighbours
        candidates = np.clip(idx[:, None] + np.array([-1, 0, 1])[None, :], 0, p.size - 1)
        scores = ns[:, None] * p.xs[candidates] - p.phis[candidates]
        idx = candidates[np.arange(ns.size), np.argmax(scores, axis=1)]
    else:
        idx = np.argmax(ns[:, None] * p.xs[None, :] - p.phis[None, :], axis=1)

    A = ns * p.xs[idx] - p.phis[idx]
    maximizers = p.xs[idx].astype(float)
    last = p.size - 1
    grid_limited = idx == last

    if refine and p.source is not None and p.source.smooth:
        for n in range(1, N + 1):
            if idx[n] != last:
                A[n], maximizers[n] = _refine(p, n, int(idx[n]), float(A[n]))

    if p.origin is not None and -p.origin >= A[0]:
        A[0] = -p.origin
        maximizers[0] = -np.inf
        grid_limited[0] = False

    if not p.domain.is_disc and np.any(grid_limited):
        first = int(np.argmax(grid_limited))
        if on_boundary == 'raise':
            raise MaximizerAtBoundary(first, details={'x_max': float(p.xs[-1]), 'weight': p.label})
    return MonomialNorms(A=A.astype(float), maximizers=maximizers, grid_limited=grid_limited, domain=p.domain)


def associated_envelope(m: MonomialNorms, p: LogProfile) -> LogProfile:
    """phi_hat(x) = max_n (n x - A_n) on p's grid, a convex lower bound for phi"""
    ns = np.arange(m.N + 1, dtype=float)
    finite = np.isfinite(m.A)
    table = ns[finite, None] * p.xs[None, :] - m.A[finite, None]
    phis = table.max(axis=0)
    origin = float(-m.A[0]) if finite[0] else None
    return LogProfile(xs=p.xs, phis=phis, domain=p.domain, levels=p.levels, origin=origin, source=None)


def right_derivative(q: PiecewiseLinearConvex, x: float) -> float:
    """Slope of the segment starting at or containing x"""
    if not (q.breakpoints[0] <= x <= q.breakpoints[-1]):
        raise OutOfRange(f"x = {x} outside the breakpoint range",
                         details={'x_min': float(q.breakpoints[0]), 'x_max': float(q.breakpoints[-1])})
    i = int(np.searchsorted(q.breakpoints, x, side='right')) - 1
    return float(q.slopes[min(i, q.segments - 1)])


def log_convex_profile(v: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS,
                       p: Optional[LogProfile] = None) -> Tuple[LogProfile, bool]:
    """Profile of v when log-convex, else the minorant profile; second item says which"""
    p = p if p is not None else sample_log_profile(v, settings.grid(), settings)
    if is_log_convex(p)[0]:
        return p, True
    return minorant_profile(p), False
