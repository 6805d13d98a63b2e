#!/usr/bin/env python3
"""
Radial weights for weightlab
Built-in families, piecewise and tabulated log-profiles, derived weights,
the weight-spec grammar and sampling onto dyadic grids.
All evaluation happens on phi(x) = log v(e^x).
"""

import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from weightlab.config import AnalysisSettings, DEFAULT_SETTINGS
from weightlab.expressions import parse_number
from weightlab.models import (
    DISC, PLANE, Domain, DomainKind, EquivalentWeight, GridSpec, LogProfile, RadialWeight, SourceKind,
    DegenerateProfile, InvalidForDomain, InvalidParams, OutOfDomain, ParseError, UnknownFamily, WeightInvalid,
)


LOG2 = math.log(2.0)


def one_minus_r(xs):
    """1 - e^x without cancellation"""
    return -np.expm1(xs)


def t_of_x(xs):
    """t = log(1/(1-r)) for r = e^x"""
    return -np.log(-np.expm1(xs))


def x_of_t(ts):
    """x = log r for t = log(1/(1-r)), accurate as r -> 1"""
    return np.log1p(-np.exp(-np.asarray(ts, dtype=float)))


def dt_dx(xs):
    """Derivative of t with respect to x, r/(1-r)"""
    return np.exp(xs) / -np.expm1(xs)


@dataclass(frozen=True)
class FamilySpec:
    """A closed-form weight family"""
    name: str
    domain: DomainKind
    arity: int
    formula: str
    build: Callable[[Tuple[float, ...]], RadialWeight]


def _require_positive(family: str, names: Sequence[str], params: Tuple[float, ...]) -> None:
    for name, value in zip(names, params):
        if not value > 0:
            raise InvalidParams(f"{family} needs {name} > 0", details={name: value})


def _closed_form(domain: Domain, family: str, params: Tuple[float, ...], phi, slope, **extra) -> RadialWeight:
    label = f"{family}({','.join(format(p, 'g') for p in params)})"
    return RadialWeight(domain=domain, label=label, source=SourceKind.CLOSED_FORM, phi_fn=phi, slope_fn=slope,
                        family=family, params=params, **extra)


def _power_disc(params: Tuple[float, ...]) -> RadialWeight:
    _require_positive('power_disc', ('alpha',), params)
    (alpha,) = params
    return _closed_form(DISC, 'power_disc', params,
                        lambda x: -alpha * np.log(-np.expm1(x)),
                        lambda x: alpha * dt_dx(x))


def _exp_inv_disc(params: Tuple[float, ...]) -> RadialWeight:
    _require_positive('exp_inv_disc', ('beta', 'p'), params)
    beta, p = params
    return _closed_form(DISC, 'exp_inv_disc', params,
                        lambda x: beta * np.power(-np.expm1(x), -p),
                        lambda x: beta * p * np.exp(x) * np.power(-np.expm1(x), -p - 1.0))


def _log_power_disc(params: Tuple[float, ...]) -> RadialWeight:
    (alpha,) = params
    if alpha == 0:
        raise InvalidForDomain("log_power_disc with alpha = 0 is constant and does not blow up at r -> 1",
                               details={'alpha': alpha})
    _require_positive('log_power_disc', ('alpha',), params)
    # (log(e/(1-r)))^alpha = (1 + t)^alpha
    return _closed_form(DISC, 'log_power_disc', params,
                        lambda x: alpha * np.log1p(t_of_x(x)),
                        lambda x: alpha * dt_dx(x) / (1.0 + t_of_x(x)))


def _exp_plane(params: Tuple[float, ...]) -> RadialWeight:
    _require_positive('exp_plane', ('p',), params)
    (p,) = params
    return _closed_form(PLANE, 'exp_plane', params,
                        lambda x: np.exp(p * x),
                        lambda x: p * np.exp(p * x))


def _power_exp_plane(params: Tuple[float, ...]) -> RadialWeight:
    _require_positive('power_exp_plane', ('sigma', 'p'), params)
    sigma, p = params
    return _closed_form(PLANE, 'power_exp_plane', params,
                        lambda x: sigma * np.exp(p * x),
                        lambda x: sigma * p * np.exp(p * x))


def _rapid_disc(params: Tuple[float, ...]) -> RadialWeight:
    (q,) = params
    if not q > 1:
        raise InvalidParams("rapid_disc needs q > 1", details={'q': q})
    return make_rapidly_growing_disc(lambda n: np.power(q, n), label=f"rapid_disc({q:g})",
                                     family='rapid_disc', params=params)


BUILTIN_FAMILIES: Dict[str, FamilySpec] = {
    'power_disc': FamilySpec('power_disc', DomainKind.DISC, 1, "(1-r)^-alpha", _power_disc),
    'exp_inv_disc': FamilySpec('exp_inv_disc', DomainKind.DISC, 2, "exp(beta/(1-r)^p)", _exp_inv_disc),
    'log_power_disc': FamilySpec('log_power_disc', DomainKind.DISC, 1, "(log(e/(1-r)))^alpha", _log_power_disc),
    'exp_plane': FamilySpec('exp_plane', DomainKind.PLANE, 1, "exp(r^p)", _exp_plane),
    'power_exp_plane': FamilySpec('power_exp_plane', DomainKind.PLANE, 2, "exp(sigma r^p)", _power_exp_plane),
    'rapid_disc': FamilySpec('rapid_disc', DomainKind.DISC, 1, "dyadic-linear log, increments q^n", _rapid_disc),
}


def make_builtin(family: str, params: Iterable[float], domain: Domain,
                 settings: AnalysisSettings = DEFAULT_SETTINGS) -> RadialWeight:
    """Build and validate a closed-form weight from the family table"""
    spec = BUILTIN_FAMILIES.get(family)
    if spec is None:
        raise UnknownFamily(f"Unknown weight family '{family}'", details={'known': sorted(BUILTIN_FAMILIES)})
    params = tuple(float(p) for p in params)
    if len(params) != spec.arity:
        raise InvalidParams(f"{family} takes {spec.arity} parameter(s), got {len(params)}",
                            details={'params': list(params)})
    if not all(math.isfinite(p) for p in params):
        raise InvalidParams(f"{family} parameters must be finite", details={'params': list(params)})
    if domain.kind is not spec.domain:
        raise InvalidForDomain(f"{family} is a {spec.domain.value} weight, not a {domain.name} weight",
                               details={'family': family, 'domain': domain.name})
    weight = spec.build(params)
    validate_weight(weight, settings)
    return weight


def make_custom(domain: Domain, label: str, phi, slope, *, breakpoints: Sequence[float] = (),
                level_breaks: Optional[Sequence[float]] = None, horizon: Optional[float] = None,
                smooth: bool = True, tags: Iterable[str] = ()) -> RadialWeight:
    """Closed-form weight from explicit phi and right-slope functions (no validation)"""
    return RadialWeight(domain=domain, label=label, source=SourceKind.CLOSED_FORM, phi_fn=phi, slope_fn=slope,
                        breakpoints=tuple(float(b) for b in breakpoints),
                        level_breaks=None if level_breaks is None else tuple(float(b) for b in level_breaks),
                        horizon=horizon, smooth=smooth, tags=frozenset(tags))


def _piecewise_functions(xs: np.ndarray, phis: np.ndarray):
    slopes = np.diff(phis) / np.diff(xs)

    def phi(x):
        x = np.asarray(x, dtype=float)
        inside = np.interp(x, xs, phis)
        return np.where(x > xs[-1], phis[-1] + slopes[-1] * (x - xs[-1]), inside)

    def slope(x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(xs, x, side='right') - 1
        return np.where(idx < 0, 0.0, slopes[np.clip(idx, 0, slopes.size - 1)])

    return phi, slope, slopes


def make_piecewise(xs: Sequence[float], phis: Sequence[float], domain: Domain, label: str = "piecewise", *,
                   source: SourceKind = SourceKind.PIECEWISE, level_breaks: Optional[Sequence[float]] = None,
                   horizon: Optional[float] = None, tags: Iterable[str] = ()) -> RadialWeight:
    """
    Weight whose phi is linear in x between the given points, constant to the
    left of the first point and continued with the final slope to the right.
    """
    xs = np.asarray(xs, dtype=float)
    phis = np.asarray(phis, dtype=float)
    if xs.ndim != 1 or xs.shape != phis.shape:
        raise ParseError("Piecewise weight needs equally long xs and phis")
    if xs.size < 2:
        raise DegenerateProfile("Piecewise weight needs at least two points")
    if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(phis)):
        raise WeightInvalid("Piecewise weight has non-finite entries", invariant="finite log-profile")
    if not np.all(np.diff(xs) > 0):
        raise WeightInvalid("Piecewise breakpoints must be strictly increasing", invariant="increasing xs")
    if domain.is_disc and xs[-1] >= 0:
        raise OutOfDomain("Disc breakpoints must satisfy x = log r < 0", details={'x_max': float(xs[-1])})
    if np.any(np.diff(phis) < 0):
        bad = int(np.argmax(np.diff(phis) < 0))
        raise WeightInvalid("v must be nondecreasing", invariant="v nondecreasing",
                            details={'x': float(xs[bad + 1])})
    phi, slope, _ = _piecewise_functions(xs, phis)
    return RadialWeight(domain=domain, label=label, source=source, phi_fn=phi, slope_fn=slope,
                        breakpoints=tuple(xs.tolist()),
                        level_breaks=None if level_breaks is None else tuple(float(b) for b in level_breaks),
                        horizon=float(xs[-1]) if horizon is None else float(horizon), smooth=False,
                        tags=frozenset(tags))


def make_tabulated(xs: Sequence[float], log_values: Sequence[float], domain: Domain,
                   label: str = "tabulated") -> RadialWeight:
    """Sampled log v on an x-grid, interpolated linearly in x"""
    return make_piecewise(xs, log_values, domain, label, source=SourceKind.TABULATED)


def make_rapidly_growing_disc(increments: Callable[[np.ndarray], np.ndarray], levels: int = 64,
                              label: str = "rapid_disc", family: Optional[str] = None,
                              params: Tuple[float, ...] = ()) -> RadialWeight:
    """
    Disc weight whose log is a linear function of log r between the points
    r_n = exp(-2^-n), rising by increments(n) from r_n to r_{n+1}.
    Nondecreasing increments keep it log-convex; unbounded ones make it
    rapidly growing (not of moderate growth).
    """
    n = np.arange(levels, dtype=float)
    inc = np.asarray(increments(n), dtype=float)
    if inc.shape != n.shape or not np.all(np.isfinite(inc)) or np.any(inc <= 0):
        raise InvalidParams("Rapid-growth increments must be positive and finite")
    if np.any(np.diff(inc) < 0):
        raise InvalidParams("Rapid-growth increments must be nondecreasing")
    knots = -np.power(2.0, -np.arange(levels + 1, dtype=float))
    values = np.concatenate([[0.0], np.cumsum(inc)])
    phi, slope, _ = _piecewise_functions(knots, values)
    return RadialWeight(domain=DISC, label=label, source=SourceKind.CLOSED_FORM, phi_fn=phi, slope_fn=slope,
                        family=family, params=params, breakpoints=tuple(knots.tolist()),
                        horizon=float(knots[-1]), smooth=False, tags=frozenset({'rapidly_growing'}))


def _equivalent_map(v: RadialWeight, transform: Callable[[RadialWeight], RadialWeight]) -> Optional[EquivalentWeight]:
    if v.equivalent is None:
        return None
    return EquivalentWeight(transform(v.equivalent.weight), v.equivalent.log_constant, v.equivalent.note)


def over_one_minus_r(v: RadialWeight) -> RadialWeight:
    """w(r) = v(r)/(1-r), the canonical disc partner"""
    if not v.domain.is_disc:
        raise InvalidForDomain("v/(1-r) is only defined on the disc", details={'weight': v.label})
    phi_v, slope_v = v.phi_fn, v.slope_fn
    return replace(v, label=f"{v.label}/(1-r)",
                   phi_fn=lambda x: phi_v(x) - np.log(-np.expm1(x)),
                   slope_fn=lambda x: slope_v(x) + dt_dx(x),
                   family=None, params=(), tags=frozenset(),
                   equivalent=_equivalent_map(v, over_one_minus_r))


def scaled(v: RadialWeight, log_constant: float) -> RadialWeight:
    """e^c v"""
    phi_v = v.phi_fn
    return replace(v, label=f"exp({log_constant:g})*{v.label}",
                   phi_fn=lambda x: phi_v(x) + log_constant, family=None, params=(),
                   equivalent=_equivalent_map(v, lambda u: scaled(u, log_constant)))


def canonical_partner(v: RadialWeight) -> RadialWeight:
    """w = v/(1-r) on the disc, w = v on the plane"""
    return over_one_minus_r(v) if v.domain.is_disc else v


_SPEC_PATTERN = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*@\s*([A-Za-z]+)\s*$")
AUTO_PARTNER = "auto:v-over-1-minus-r"
SAME = "same"


def parse_weight_spec(text: str, base: Optional[RadialWeight] = None,
                      settings: AnalysisSettings = DEFAULT_SETTINGS) -> RadialWeight:
    """
    Weight-spec grammar:
      family(p1,p2,...)@disc|plane    built-in family
      piecewise:<path>.json           breakpoint file
      same                            the base weight itself
      auto:v-over-1-minus-r           base/(1-r)
    """
    text = (text or "").strip()
    if text in (SAME, AUTO_PARTNER):
        if base is None:
            raise ParseError(f"'{text}' needs a first weight to refer to")
        return base if text == SAME else over_one_minus_r(base)
    if text.startswith("piecewise:"):
        return load_piecewise_json(text[len("piecewise:"):], settings)
    match = _SPEC_PATTERN.match(text)
    if match is None:
        raise ParseError(f"Cannot parse weight spec '{text}'",
                         details={'grammar': "family(p1,...)@disc|plane | piecewise:<path> | same | "
                                             + AUTO_PARTNER})
    family, raw_params, raw_domain = match.groups()
    domain = Domain.parse(raw_domain)
    params = [parse_number(p, 'parameter') for p in raw_params.split(',')] if raw_params.strip() else []
    return make_builtin(family, params, domain, settings)


def load_piecewise_json(path: str, settings: AnalysisSettings = DEFAULT_SETTINGS) -> RadialWeight:
    """Read {"xs": [...], "phis": [...], "domain": "disc"|"plane"} and validate it"""
    file_path = Path(path)
    try:
        with open(file_path, 'r') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ParseError(f"Piecewise weight file not found: {path}")
    except json.JSONDecodeError as e:
        raise ParseError(f"Piecewise weight file is not valid JSON: {path}", details={'error': str(e)})
    if not isinstance(data, dict) or not {'xs', 'phis', 'domain'} <= set(data):
        raise ParseError("Piecewise weight file needs fields xs, phis and domain", details={'path': path})
    weight = make_piecewise(data['xs'], data['phis'], Domain.parse(str(data['domain'])),
                            label=str(data.get('label', f"piecewise:{file_path.name}")))
    validate_weight(weight, settings)
    return weight


def _level_widths(u: np.ndarray, levels: np.ndarray, level: int) -> float:
    members = u[levels == level]
    return float(members[-1] - members[0]) if members.size else 0.0


def _merge_trailing_level(u: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Fold a trailing window shorter than half its predecessor into it"""
    present = np.unique(levels)
    if present.size < 2:
        return levels
    last, previous = present[-1], present[-2]
    if _level_widths(u, levels, last) < 0.5 * _level_widths(u, levels, previous):
        levels = np.where(levels == last, previous, levels)
    return levels


def grid_points(w: RadialWeight, g: Optional[GridSpec] = None,
                settings: AnalysisSettings = DEFAULT_SETTINGS) -> Tuple[np.ndarray, np.ndarray]:
    """x-grid for w (dyadic in t on the disc, in x on the plane, breakpoints merged) and window levels"""
    g = g or settings.grid()
    ppl = g.points_per_level

    if w.domain.is_disc:
        depth = g.depth
        if w.horizon is not None:
            depth = min(depth, int(math.floor(float(t_of_x(w.horizon)) / LOG2 + 1e-9)))
        if depth < 1:
            raise DegenerateProfile("Weight horizon ends inside the first dyadic level",
                                    details={'weight': w.label, 'horizon': w.horizon})
        k = np.arange(1, depth * ppl + 1, dtype=float)
        xs = x_of_t((k / ppl) * LOG2)
    else:
        x_max = g.plane_x_max if w.horizon is None else min(g.plane_x_max, w.horizon)
        k_min = math.ceil(g.plane_x_min * ppl / LOG2 - 1e-9)
        k_max = math.floor(x_max * ppl / LOG2 + 1e-9)
        if k_max <= k_min:
            raise DegenerateProfile("Plane grid is empty", details={'weight': w.label, 'x_max': x_max})
        xs = (np.arange(k_min, k_max + 1, dtype=float) / ppl) * LOG2
        if x_max == w.horizon and xs[-1] < x_max:
            # the grid ends exactly at the horizon
            xs = np.append(xs, x_max)

    xs = merge_breakpoints(xs, w.breakpoints)
    return xs, window_levels(w, xs)


def merge_breakpoints(xs: np.ndarray, breakpoints: Sequence[float]) -> np.ndarray:
    """Add the breakpoints strictly inside the grid range"""
    if not len(breakpoints):
        return xs
    bps = np.asarray(breakpoints, dtype=float)
    return np.union1d(xs, bps[(bps > xs[0]) & (bps < xs[-1])])


def window_levels(w: RadialWeight, xs: np.ndarray) -> np.ndarray:
    """Tail-window index of each grid point: dyadic levels, or the weight's own level breaks"""
    u = t_of_x(xs) if w.domain.is_disc else xs
    if w.level_breaks is not None:
        levels = np.searchsorted(np.asarray(w.level_breaks, dtype=float), xs, side='right')
    else:
        levels = np.floor(u / LOG2 + 1e-9).astype(int)
        levels = levels - levels.min()
    return _merge_trailing_level(u, levels.astype(int))


def sample_log_profile(w: RadialWeight, g: Optional[GridSpec] = None,
                       settings: AnalysisSettings = DEFAULT_SETTINGS) -> LogProfile:
    """Sample phi on the weight's grid"""
    xs, levels = grid_points(w, g, settings)
    phis = w.log_profile(xs)
    if not np.all(np.isfinite(phis)):
        bad = int(np.argmax(~np.isfinite(phis)))
        raise WeightInvalid(f"log v of {w.label} is not finite on the grid", invariant="finite log-profile",
                            details={'x': float(xs[bad])})
    origin = w.log_at_origin()
    return LogProfile(xs=xs, phis=phis, domain=w.domain, levels=levels,
                      origin=origin if math.isfinite(origin) else None, source=w)


def validate_weight(w: RadialWeight, settings: AnalysisSettings = DEFAULT_SETTINGS) -> LogProfile:
    """Check the radial-weight invariants on the default grid; returns the sampled profile"""
    p = sample_log_profile(w, settings.grid(), settings)
    phis, xs = p.phis, p.xs
    tol = 1e-12 * np.maximum(1.0, np.abs(phis[:-1]))
    drops = np.diff(phis) < -tol
    if np.any(drops):
        raise WeightInvalid(f"{w.label} is not nondecreasing", invariant="v nondecreasing",
                            details={'x': float(xs[int(np.argmax(drops)) + 1])})
    if p.origin is not None and p.origin > phis[0] + 1e-12 * max(1.0, abs(phis[0])):
        raise WeightInvalid(f"{w.label} decreases after r = 0", invariant="v nondecreasing",
                            details={'log_v0': p.origin, 'log_v_first': float(phis[0])})

    if w.domain.is_disc:
        rise = phis[-1] - phis[p.size // 2]
        if rise < settings.disc_validity_margin:
            raise WeightInvalid(f"{w.label} does not blow up as r -> 1", invariant="v -> infinity as r -> 1",
                                details={'rise_over_second_half': float(rise)})
    else:
        tail = xs >= 1.0
        if np.count_nonzero(tail) < 2:
            raise WeightInvalid("Plane grid too short to check growth", invariant="log r = o(log v)")
        q = phis[tail] / xs[tail]
        if not (q[-1] >= settings.plane_validity_threshold and q[-1] > q[0]):
            raise WeightInvalid(f"{w.label} does not beat every power of r on the grid",
                                invariant="log r = o(log v)",
                                details={'ratio_first': float(q[0]), 'ratio_last': float(q[-1])})
    return p


def eval_log(w: RadialWeight, r: float) -> float:
    """log v(r) for 0 <= r < a"""
    r = float(r)
    if not (0.0 <= r < w.domain.a):
        raise OutOfDomain(f"r = {r} is outside [0, {w.domain.a})", details={'r': r, 'domain': w.domain.name})
    x = -math.inf if r == 0.0 else math.log(r)
    return float(w.log_profile(np.array([x]))[0])
