"""
weightlab

Numerical toolkit for radial weights on the unit disc and the complex plane:
growth conditions, convex regularization, monomial norms and boundedness
verdicts for differentiation and integration on weighted sup-norm spaces.
"""

from .config import AnalysisSettings
from .convexity import convex_minorant, minorant_weight, monomial_log_norms
from .counterexamples import build_example, designed_gaps
from .criteria import classify_weight, estimate_tail
from .models import (
    DISC, PLANE, ConditionReport, ConditionVerdict, Operator, OperatorVerdict, RadialWeight, Verdict,
    WeightLabError,
)
from .operators import boundedness_verdict, epimorphism_verdict, monomial_norm_ratios
from .orchestrator import WeightLabOrchestrator
from .weights import make_builtin, parse_weight_spec, sample_log_profile, validate_weight

__version__ = "1.0.0"
__all__ = [
    "AnalysisSettings",
    "DISC",
    "PLANE",
    "ConditionReport",
    "ConditionVerdict",
    "Operator",
    "OperatorVerdict",
    "RadialWeight",
    "Verdict",
    "WeightLabError",
    "WeightLabOrchestrator",
    "boundedness_verdict",
    "build_example",
    "classify_weight",
    "convex_minorant",
    "designed_gaps",
    "epimorphism_verdict",
    "estimate_tail",
    "make_builtin",
    "minorant_weight",
    "monomial_log_norms",
    "monomial_norm_ratios",
    "parse_weight_spec",
    "sample_log_profile",
    "validate_weight",
]
