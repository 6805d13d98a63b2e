#!/usr/bin/env python3
"""
Request workflows for weightlab
Coordinates parsing, the condition batteries, verdicts and report assembly
"""

import time
from typing import Any, Dict, List, Optional

import numpy as np

from weightlab.config import AnalysisSettings
from weightlab.convexity import monomial_log_norms
from weightlab.counterexamples import DEFAULT_SEQUENCES, build_example, designed_gaps
from weightlab.criteria import (
    check_disc_d_conditions, check_disc_i_conditions, check_epimorphism_disc, check_epimorphism_plane,
    check_integral_sufficiency_derivative, check_log_domination, check_necessary_derivative_bound,
    check_plane_d_conditions, check_plane_derivative_growth_bound, check_plane_i_conditions, classify_weight,
    implied_norm_floor,
)
from weightlab.models import (
    ConditionReport, Operator, OperatorVerdict, ParseError, RadialWeight, ReportDocument, Verdict,
)
from weightlab.operators import (
    boundedness_verdict, canonical_partner, epimorphism_verdict, monomial_norm_ratios, monomial_ratio_report,
    operator_norm_upper_bound, sufficient_boundedness_check,
)
from weightlab.reporting import (
    ConsoleReporter, add_condition_traces, bundle_to_dict, condition_to_dict, gap_to_dict, norms_rows,
    tags_to_dict, verdict_to_dict, weight_to_dict,
)
from weightlab.weights import SAME, parse_weight_spec, sample_log_profile, validate_weight


class WeightLabOrchestrator:
    """Runs one CLI request and returns its ReportDocument"""

    # Counterexample names the CLI accepts
    COUNTEREXAMPLES = tuple(sorted(DEFAULT_SEQUENCES))

    def __init__(self, settings: Optional[AnalysisSettings] = None, reporter: Optional[ConsoleReporter] = None):
        self.settings = settings or AnalysisSettings()
        self.reporter = reporter or ConsoleReporter(quiet=True, tables=False)

    def _document(self, command: str, inputs: Dict[str, Any]) -> ReportDocument:
        return ReportDocument(command=command, inputs=inputs, settings=self.settings.to_dict())

    def _load(self, spec: str, base: Optional[RadialWeight] = None) -> RadialWeight:
        weight = parse_weight_spec(spec, base=base, settings=self.settings)
        p = validate_weight(weight, self.settings)
        self.reporter.progress(f"📊 Weight {weight.label} on the {weight.domain.name}: {p.size} grid points, "
                               f"x in [{p.xs[0]:.4g}, {p.xs[-1]:.4g}]")
        return weight

    def _timed(self, start: float) -> None:
        self.reporter.progress(f"⏱️ Finished in {time.time() - start:.2f} seconds")

    # ------------------------------------------------------------------
    # analyze
    # ------------------------------------------------------------------

    def _condition_battery(self, v: RadialWeight) -> List[ConditionReport]:
        """Domain batteries followed by the single-condition checks"""
        s = self.settings
        partner = canonical_partner(Operator.D, v)
        if v.domain.is_disc:
            reports = check_disc_d_conditions(v, s) + check_disc_i_conditions(v, s)
            reports += [
                check_log_domination(v, s),
                check_epimorphism_disc(v, s),
                implied_norm_floor(v, s),
            ]
        else:
            reports = check_plane_d_conditions(v, s) + check_plane_i_conditions(v, s)
            reports += [
                check_plane_derivative_growth_bound(v, s),
                check_epimorphism_plane(v, s),
            ]
        reports += [
            check_integral_sufficiency_derivative(partner, v, s),
            check_necessary_derivative_bound(v, partner, s),
            sufficient_boundedness_check(v, partner, s),
        ]
        return reports

    def run_analyze(self, spec: str) -> ReportDocument:
        """Classes, condition batteries and canonical-pair verdicts for one weight"""
        start = time.time()
        self.reporter.banner(f"🚀 ANALYZE {spec}")
        v = self._load(spec)

        self.reporter.progress("📊 Classifying weight")
        tags = classify_weight(v, self.settings)
        self.reporter.progress(f"📊 Running {v.domain.name} condition batteries")
        reports = self._condition_battery(v)

        self.reporter.progress("📊 Deciding D and I on the canonical pair")
        partner = canonical_partner(Operator.D, v)
        verdicts = [boundedness_verdict(op, v, partner, self.settings) for op in Operator]
        verdicts.append(epimorphism_verdict(v, self.settings))

        doc = self._document("analyze", {'weight': spec})
        doc.sections = {
            'weight': weight_to_dict(v),
            'classes': tags_to_dict(tags),
            'conditions': [condition_to_dict(r) for r in reports],
            'verdicts': [verdict_to_dict(vd) for vd in verdicts],
        }
        add_condition_traces(doc.traces, "", reports)
        add_condition_traces(doc.traces, "class", tags.evidence.values())
        self.reporter.print_analysis(v, tags, reports, verdicts)
        self._timed(start)
        return doc

    # ------------------------------------------------------------------
    # verdict
    # ------------------------------------------------------------------

    def run_verdict(self, op: str, spec_v: str, spec_w: str) -> ReportDocument:
        """Boundedness of D: H_v -> H_w or I: H_w -> H_v with its evidence chain"""
        start = time.time()
        operator = Operator.parse(op)
        self.reporter.banner(f"🚀 VERDICT {operator.value} on ({spec_v}, {spec_w})")
        v = self._load(spec_v)
        w = self._load(spec_w, base=v)

        verdict: OperatorVerdict = boundedness_verdict(operator, v, w, self.settings)
        if operator is Operator.D and verdict.verdict is Verdict.BOUNDED and verdict.upper_bound is None:
            verdict.upper_bound = operator_norm_upper_bound(v, w, self.settings)

        doc = self._document("verdict", {'operator': operator.value, 'v': spec_v, 'w': spec_w})
        doc.sections = {'v': weight_to_dict(v), 'w': weight_to_dict(w), 'verdict': verdict_to_dict(verdict)}
        add_condition_traces(doc.traces, "", verdict.evidence)
        doc.exit_code = verdict.verdict.exit_code
        self.reporter.print_verdict(verdict)
        self._timed(start)
        return doc

    # ------------------------------------------------------------------
    # counterexample
    # ------------------------------------------------------------------

    def run_counterexample(self, which: str, a: Optional[str] = None, b: Optional[str] = None,
                           eps: Optional[str] = None, jumps: Optional[str] = None,
                           n_max: Optional[int] = None) -> ReportDocument:
        """Build a counterexample and re-derive each designed gap"""
        start = time.time()
        if which not in DEFAULT_SEQUENCES:
            raise ParseError(f"Unknown counterexample '{which}'", details={'expected': list(self.COUNTEREXAMPLES)})
        self.reporter.banner(f"🚀 COUNTEREXAMPLE {which}")
        bundle = build_example(which, a=a, b=b, eps=eps, jumps=jumps, n_max=n_max, settings=self.settings)
        self.reporter.progress(f"📊 Built {bundle.v.label} with {len(bundle.breakpoints)} breakpoints")

        gaps = designed_gaps(bundle, self.settings)
        for gap in gaps:
            self.reporter.progress(f"  {'✅' if gap.passed else '❌'} {gap.name}: {gap.detail}")

        p = sample_log_profile(bundle.v, self.settings.grid(), self.settings)
        phi_bar = bundle.v_bar.log_profile(p.xs)

        inputs = {'example': which, 'a': a, 'b': b, 'eps': eps, 'jumps': jumps, 'n_max': n_max}
        doc = self._document("counterexample", {k: val for k, val in inputs.items() if val is not None})
        doc.sections = {'bundle': bundle_to_dict(bundle), 'gaps': [gap_to_dict(g) for g in gaps],
                        'all_gaps_reproduced': all(g.passed for g in gaps)}
        doc.traces['phi_vs_phibar'] = (["x", "phi", "phi_bar"],
                                       [(float(x), float(y), float(z)) for x, y, z in zip(p.xs, p.phis, phi_bar)])
        for gap in gaps:
            add_condition_traces(doc.traces, gap.name, gap.reports)
        doc.exit_code = 0 if doc.sections['all_gaps_reproduced'] else 2
        if doc.exit_code:
            self.reporter.progress("⚠️ Some designed gaps were not reproduced")
        self.reporter.print_counterexample(bundle, gaps)
        self._timed(start)
        return doc

    # ------------------------------------------------------------------
    # norms
    # ------------------------------------------------------------------

    def run_norms(self, spec_v: str, spec_w: Optional[str] = None, op: Optional[str] = None,
                  N: Optional[int] = None) -> ReportDocument:
        """A_n table and, with an operator, the monomial ratio trace"""
        if op is None and spec_w is not None and spec_w != SAME:
            raise ParseError("A second weight needs an operator", details={'w': spec_w})
        start = time.time()
        self.reporter.banner(f"🚀 NORMS {spec_v}")
        v = self._load(spec_v)
        order = int(N) if N is not None else self.settings.monomial_order(v.domain.is_disc)
        if order < 1:
            raise ParseError("N must be at least 1", details={'N': order})

        p = sample_log_profile(v, self.settings.grid(), self.settings)
        norms = monomial_log_norms(p, order, refine=True, on_boundary='flag')
        limited = int(np.count_nonzero(norms.grid_limited))
        if limited:
            self.reporter.progress(f"⚠️ {limited} of {order + 1} norms have their maximizer at the grid edge")

        inputs: Dict[str, Any] = {'v': spec_v, 'N': order}
        sections: Dict[str, Any] = {
            'weight': weight_to_dict(v),
            'norms': {'N': order, 'grid_limited': limited,
                      'A': norms.A.tolist(), 'maximizers': norms.maximizers.tolist()},
        }
        traces = {'norms': (["n", "A_n", "x_n", "grid_limited"], norms_rows(norms))}

        ratio_report = None
        if op is not None:
            operator = Operator.parse(op)
            w = self._load(spec_w, base=v) if spec_w is not None else canonical_partner(operator, v)
            ratios = monomial_norm_ratios(operator, v, w, order, settings=self.settings)
            ratio_report = monomial_ratio_report(ratios, self.settings)
            inputs.update({'op': operator.value, 'w': spec_w if spec_w is not None else w.label})
            sections['ratios'] = {'operator': operator.value, 'w': w.label,
                                  'values': [float(r) for r in ratios], 'trend': condition_to_dict(ratio_report)}
            traces['ratios'] = (["n", "ratio"], [(n, float(r)) for n, r in enumerate(ratios)])
        doc = self._document("norms", inputs)
        doc.sections = sections
        doc.traces = traces
        self.reporter.print_norms(norms, v.label, ratio_report)
        self._timed(start)
        return doc
