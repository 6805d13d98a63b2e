#!/usr/bin/env python3
"""
Data models and exceptions for weightlab
Radial weights, sampled log-profiles, condition reports and operator verdicts
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Tuple

import numpy as np


ArrayFn = Callable[[np.ndarray], np.ndarray]


class DomainKind(Enum):
    """The two domains a radial weight can live on"""
    DISC = "disc"
    PLANE = "plane"


@dataclass(frozen=True)
class Domain:
    """Unit disc (a = 1) or complex plane (a = +inf)"""
    kind: DomainKind

    @property
    def a(self) -> float:
        return 1.0 if self.kind is DomainKind.DISC else math.inf

    @property
    def is_disc(self) -> bool:
        return self.kind is DomainKind.DISC

    @property
    def name(self) -> str:
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> "Domain":
        """Parse 'disc' or 'plane'"""
        try:
            return cls(DomainKind(text.strip().lower()))
        except ValueError:
            raise ParseError(f"Unknown domain '{text}'", details={'expected': ['disc', 'plane']})


DISC = Domain(DomainKind.DISC)
PLANE = Domain(DomainKind.PLANE)


class SourceKind(Enum):
    """How a weight's log-profile is defined"""
    CLOSED_FORM = "closed_form"
    PIECEWISE = "piecewise"
    TABULATED = "tabulated"


class Operator(Enum):
    """Differentiation and integration"""
    D = "D"
    I = "I"

    @classmethod
    def parse(cls, text: str) -> "Operator":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ParseError(f"Unknown operator '{text}'", details={'expected': ['D', 'I']})


class EstimateKind(Enum):
    LIMSUP = "limsup"
    LIMINF = "liminf"
    LIMIT = "limit"


class Trend(Enum):
    CONVERGES_TO = "converges_to"
    DIVERGES_TO_INFINITY = "diverges_to_infinity"
    DECAYS_TO_ZERO = "decays_to_zero"
    OSCILLATING = "oscillating"


class Confidence(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class ConditionVerdict(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


class Verdict(Enum):
    """Final operator decision; the value doubles as the CLI exit code"""
    BOUNDED = "bounded"
    UNBOUNDED = "unbounded"
    INCONCLUSIVE = "inconclusive"

    @property
    def exit_code(self) -> int:
        return {Verdict.BOUNDED: 0, Verdict.UNBOUNDED: 1, Verdict.INCONCLUSIVE: 2}[self]


class WeightClass(Enum):
    """Weight classes recognised by classify_weight"""
    LOG_CONVEX = "LogConvex"
    MODERATE_GROWTH = "ModerateGrowth"
    RAPIDLY_GROWING = "RapidlyGrowing"
    H_WEIGHT = "HWeight"
    CK_WEIGHT = "CKWeight"
    BBT_WEIGHT = "BBTWeight"
    REGULAR = "Regular"
    HL_CONDITION = "HLCondition"


@dataclass(frozen=True)
class GridSpec:
    """Sampling grid: uniform in t = log(1/(1-r)) on the disc, in x = log r on the plane"""
    depth: int = 40
    points_per_level: int = 8
    plane_x_min: float = -1.0
    plane_x_max: float = 16.0

    def __post_init__(self):
        if self.depth < 1 or self.points_per_level < 1:
            raise InvalidParams("Grid depth and points per level must be positive",
                                details={'depth': self.depth, 'points_per_level': self.points_per_level})
        if self.depth > 1000:
            # 1 - r would underflow long before this
            raise InvalidParams("Grid depth too large for double precision", details={'depth': self.depth})
        if not self.plane_x_min < self.plane_x_max:
            raise InvalidParams("Plane grid needs x_min < x_max",
                                details={'x_min': self.plane_x_min, 'x_max': self.plane_x_max})

    def refined(self) -> "GridSpec":
        """Same range at twice the resolution"""
        return replace(self, points_per_level=2 * self.points_per_level)

    def to_dict(self) -> dict:
        return {
            'depth': self.depth,
            'points_per_level': self.points_per_level,
            'plane_x_min': self.plane_x_min,
            'plane_x_max': self.plane_x_max,
        }


@dataclass(frozen=True, eq=False)
class RadialWeight:
    """
    A radial weight v on the disc or the plane, stored through its log-profile
    phi(x) = log v(e^x) and the right derivative d phi/dx.
    """
    domain: Domain
    label: str
    source: SourceKind
    phi_fn: ArrayFn
    slope_fn: ArrayFn
    family: Optional[str] = None
    params: Tuple[float, ...] = ()
    breakpoints: Tuple[float, ...] = ()
    level_breaks: Optional[Tuple[float, ...]] = None
    horizon: Optional[float] = None
    smooth: bool = True
    tags: FrozenSet[str] = frozenset()
    equivalent: Optional["EquivalentWeight"] = None

    def log_profile(self, xs) -> np.ndarray:
        """phi at the given x = log r values (vectorised, x = -inf means r = 0)"""
        xs = np.asarray(xs, dtype=float)
        with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
            return np.asarray(self.phi_fn(xs), dtype=float)

    def log_slope(self, xs) -> np.ndarray:
        """Right derivative of phi in x"""
        xs = np.asarray(xs, dtype=float)
        with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
            return np.asarray(self.slope_fn(xs), dtype=float)

    def log_at_origin(self) -> float:
        """log v(0)"""
        return float(self.log_profile(np.array([-np.inf]))[0])

    def with_label(self, label: str) -> "RadialWeight":
        return replace(self, label=label)

    def with_equivalent(self, weight: "RadialWeight", log_constant: float, note: str = "") -> "RadialWeight":
        return replace(self, equivalent=EquivalentWeight(weight, float(log_constant), note))


@dataclass(frozen=True, eq=False)
class EquivalentWeight:
    """Reference weight u with e^{-c} u <= v <= e^{c} u, so H_v = H_u with equivalent norms"""
    weight: RadialWeight
    log_constant: float
    note: str = ""


@dataclass(frozen=True, eq=False)
class LogProfile:
    """Sampled phi(x) = log v(e^x) on a strictly increasing x-grid"""
    xs: np.ndarray
    phis: np.ndarray
    domain: Domain
    levels: np.ndarray
    origin: Optional[float] = None
    source: Optional[RadialWeight] = None

    def __post_init__(self):
        if self.xs.shape != self.phis.shape or self.xs.shape != self.levels.shape:
            raise DegenerateProfile("Profile arrays differ in length",
                                    details={'xs': self.xs.shape, 'phis': self.phis.shape})
        if self.xs.size >= 2 and not np.all(np.diff(self.xs) > 0):
            raise DegenerateProfile("Profile x-grid must be strictly increasing")
        if self.domain.is_disc and self.xs.size and self.xs[-1] >= 0:
            raise OutOfDomain("Disc profile reaches r >= 1", details={'x_max': float(self.xs[-1])})

    @property
    def size(self) -> int:
        return int(self.xs.size)

    @property
    def label(self) -> str:
        return self.source.label if self.source is not None else "profile"


@dataclass(frozen=True, eq=False)
class PiecewiseLinearConvex:
    """Convex piecewise-linear function given by breakpoints, values and segment slopes"""
    breakpoints: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    @property
    def segments(self) -> int:
        return int(self.slopes.size)


@dataclass(frozen=True, eq=False)
class MonomialNorms:
    """A_n = log ||z^n||_v for n = 0..N with maximizers x_n"""
    A: np.ndarray
    maximizers: np.ndarray
    grid_limited: np.ndarray
    domain: Domain

    @property
    def N(self) -> int:
        return int(self.A.size) - 1


@dataclass(frozen=True)
class Window:
    """One tail window (a dyadic level) and its extremal value"""
    level: int
    x_start: float
    x_end: float
    value: float


@dataclass(frozen=True)
class AsymptoticEstimate:
    """Numerical stand-in for limsup / liminf / lim as r -> a"""
    kind: EstimateKind
    windows: Tuple[Window, ...]
    trend: Trend
    limit: Optional[float]
    confidence: Confidence

    @property
    def value(self) -> float:
        if self.trend is Trend.CONVERGES_TO:
            return float(self.limit)
        if self.trend is Trend.DIVERGES_TO_INFINITY:
            return math.inf
        if self.trend is Trend.DECAYS_TO_ZERO:
            return 0.0
        return math.nan

    @property
    def is_stable(self) -> bool:
        return self.confidence is Confidence.STABLE

    def is_bounded(self) -> bool:
        return self.is_stable and self.trend in (Trend.CONVERGES_TO, Trend.DECAYS_TO_ZERO)

    def is_unbounded(self) -> bool:
        return self.is_stable and self.trend is Trend.DIVERGES_TO_INFINITY

    def describe(self) -> str:
        if self.trend is Trend.CONVERGES_TO:
            return f"{self.kind.value} -> {self.limit:.6g}"
        if self.trend is Trend.DIVERGES_TO_INFINITY:
            return f"{self.kind.value} -> +inf"
        if self.trend is Trend.DECAYS_TO_ZERO:
            return f"{self.kind.value} -> 0"
        return f"{self.kind.value} oscillating"


@dataclass
class ConditionReport:
    """Outcome of one numerical condition check"""
    condition_id: str
    verdict: ConditionVerdict
    detail: str
    estimate: Optional[AsymptoticEstimate] = None
    value: Optional[float] = None
    parameters: Dict[str, float] = field(default_factory=dict)
    trace: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        if self.estimate is not None and not self.estimate.is_stable:
            self.verdict = ConditionVerdict.INCONCLUSIVE

    @property
    def holds(self) -> bool:
        return self.verdict is ConditionVerdict.HOLDS

    @property
    def fails(self) -> bool:
        return self.verdict is ConditionVerdict.FAILS


@dataclass
class WeightClassTags:
    """Classes a weight belongs to, with the report that decided each one"""
    flags: FrozenSet[WeightClass]
    regular_limit: Optional[float] = None
    evidence: Dict[str, ConditionReport] = field(default_factory=dict)

    def __post_init__(self):
        if WeightClass.H_WEIGHT in self.flags and not (
                WeightClass.MODERATE_GROWTH in self.flags or WeightClass.RAPIDLY_GROWING in self.flags):
            raise ValueError("HWeight requires ModerateGrowth or RapidlyGrowing")
        if (WeightClass.REGULAR in self.flags) != (self.regular_limit is not None):
            raise ValueError("Regular tag and L_v must come together")

    def has(self, flag: WeightClass) -> bool:
        return flag in self.flags

    def names(self) -> List[str]:
        return [c.value for c in WeightClass if c in self.flags]


@dataclass(frozen=True)
class PolyFunction:
    """Polynomial with nonnegative Taylor coefficients a_0..a_d"""
    coeffs: Tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if any(not math.isfinite(c) or c < 0 for c in coeffs):
            raise InvalidParams("Polynomial coefficients must be finite and nonnegative",
                                details={'coeffs': list(coeffs)})
        object.__setattr__(self, 'coeffs', coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    @classmethod
    def monomial(cls, n: int) -> "PolyFunction":
        return cls(tuple([0.0] * n + [1.0]))


@dataclass
class OperatorVerdict:
    """Bounded / Unbounded / Inconclusive with the result that justifies it"""
    operator: Operator
    v_label: str
    w_label: str
    verdict: Verdict
    justification_id: str
    justification: str
    norm_lower_bound: float
    evidence: List[ConditionReport] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    upper_bound: Optional[float] = None

    @property
    def pair(self) -> Tuple[str, str]:
        return (self.v_label, self.w_label)


@dataclass(frozen=True, eq=False)
class SequencePair:
    """Two positive sequences a_n, b_n (n >= 1) checked up to n_max"""
    a: ArrayFn
    b: ArrayFn
    n_max: int
    a_text: str = "a"
    b_text: str = "b"

    def values(self, n_stop: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(n, a_n, b_n) for n = 1..n_stop"""
        n = np.arange(1, (n_stop or self.n_max) + 1, dtype=float)
        with np.errstate(over='ignore', under='ignore'):
            a = np.broadcast_to(np.asarray(self.a(n), dtype=float), n.shape).copy()
            b = np.broadcast_to(np.asarray(self.b(n), dtype=float), n.shape).copy()
        return n, a, b


@dataclass(frozen=True, eq=False)
class CounterexampleBundle:
    """A constructed weight, the convex minorant of its log (closed form where one exists) and constants"""
    name: str
    v: RadialWeight
    v_bar: RadialWeight
    constants: Dict[str, float]
    breakpoints: np.ndarray
    breakpoint_values: np.ndarray
    notes: Tuple[str, ...] = ()


@dataclass
class GapCheck:
    """One designed property of a counterexample and whether the numerics reproduce it"""
    name: str
    passed: bool
    detail: str
    reports: List[ConditionReport] = field(default_factory=list)


@dataclass
class ReportDocument:
    """Machine-readable result of one CLI request"""
    command: str
    inputs: Dict[str, Any]
    settings: Dict[str, Any]
    sections: Dict[str, Any] = field(default_factory=dict)
    traces: Dict[str, Tuple[List[str], List[Tuple[float, ...]]]] = field(default_factory=dict)
    exit_code: int = 0
    schema_version: str = "1.0"


class WeightLabError(Exception):
    """Base error with structured details for reports"""

    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message)
        self.details = details
        self.name = 'WeightLabError'

    def to_dict(self) -> dict:
        """Convert error to dictionary for reports"""
        return {
            'error_type': self.name,
            'message': str(self),
            'details': self.details,
        }


class ParseError(WeightLabError):
    """Malformed weight spec, sequence expression or option"""

    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details)
        self.name = 'ParseError'


class WeightInvalid(WeightLabError):
    """A weight violates one of the radial-weight invariants"""

    def __init__(self, message: str, details: Optional[Any] = None, invariant: str = ""):
        super().__init__(message, details)
        self.invariant = invariant
        self.name = 'WeightInvalid'

    def to_dict(self) -> dict:
        data = super().to_dict()
        data['invariant'] = self.invariant
        return data


class UnknownFamily(WeightInvalid):
    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details, invariant="known family")
        self.name = 'UnknownFamily'


class InvalidParams(WeightInvalid):
    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details, invariant="valid parameters")
        self.name = 'InvalidParams'


class InvalidForDomain(WeightInvalid):
    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details, invariant="valid for domain")
        self.name = 'InvalidForDomain'


class OutOfDomain(WeightLabError):
    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details)
        self.name = 'OutOfDomain'


class DegenerateProfile(WeightLabError):
    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details)
        self.name = 'DegenerateProfile'


class OutOfRange(WeightLabError):
    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details)
        self.name = 'OutOfRange'


class MaximizerAtBoundary(WeightLabError):
    """The maximizer of n x - phi(x) sits on the right end of a plane grid"""

    def __init__(self, n: int, details: Optional[Any] = None):
        super().__init__(f"Maximizer for n={n} hits the end of the grid", details)
        self.n = n
        self.name = 'MaximizerAtBoundary'


class GridLimited(WeightLabError):
    """A monomial norm was only resolved up to the grid end"""

    def __init__(self, n: int, details: Optional[Any] = None):
        super().__init__(f"A_{n} is grid-limited", details)
        self.n = n
        self.name = 'GridLimited'


class TooFewLevels(WeightLabError):
    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details)
        self.name = 'TooFewLevels'


class ZeroFunction(WeightLabError):
    def __init__(self, message: str = "The zero function has no log-norm", details: Optional[Any] = None):
        super().__init__(message, details)
        self.name = 'ZeroFunction'


class DomainMismatch(WeightLabError):
    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message, details)
        self.name = 'DomainMismatch'


class SequencePropertyViolation(WeightLabError):
    """A construction sequence fails one of its required properties"""

    def __init__(self, index: int, property_id: str, message: str = "", details: Optional[Any] = None):
        super().__init__(message or f"Sequence property ({property_id}) violated at n={index}", details)
        self.index = index
        self.property_id = property_id
        self.name = 'SequencePropertyViolation'

    def to_dict(self) -> dict:
        data = super().to_dict()
        data['index'] = self.index
        data['property'] = self.property_id
        return data
