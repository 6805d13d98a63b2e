#!/usr/bin/env python3
"""
Output formatting for weightlab
Deterministic JSON reports, two-column CSV traces and console tables
"""

import csv
import json
import math
import re
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from weightlab.models import (
    AsymptoticEstimate, ConditionReport, ConditionVerdict, CounterexampleBundle, GapCheck, MonomialNorms,
    OperatorVerdict, RadialWeight, ReportDocument, Verdict, WeightClassTags, WeightLabError,
)


SCHEMA_VERSION = "1.0"
SIGNIFICANT_DIGITS = 12
TRACE_HEADERS = ["x", "value"]

VERDICT_ICONS = {
    Verdict.BOUNDED: "✅",
    Verdict.UNBOUNDED: "❌",
    Verdict.INCONCLUSIVE: "⚠️",
}
CONDITION_ICONS = {
    ConditionVerdict.HOLDS: "✅",
    ConditionVerdict.FAILS: "❌",
    ConditionVerdict.INCONCLUSIVE: "⚠️",
}


# ---------------------------------------------------------------------------
# Number formatting
# ---------------------------------------------------------------------------

def format_number(value: Any) -> Any:
    """Round to 12 significant digits; non-finite floats become 'inf', '-inf' or 'nan'"""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    rounded = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    return 0.0 if rounded == 0 else rounded


def format_cell(value: Any) -> str:
    """CSV cell text for a number"""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{SIGNIFICANT_DIGITS}g}"


def to_jsonable(value: Any) -> Any:
    """Plain JSON types with fixed float formatting"""
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_, int, np.integer, float, np.floating)):
        return format_number(value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(to_jsonable(v) for v in value)
    return str(value)


# ---------------------------------------------------------------------------
# Model -> dict
# ---------------------------------------------------------------------------

def estimate_to_dict(estimate: Optional[AsymptoticEstimate]) -> Optional[Dict[str, Any]]:
    if estimate is None:
        return None
    return {
        'kind': estimate.kind.value,
        'trend': estimate.trend.value,
        'limit': format_number(estimate.limit) if estimate.limit is not None else None,
        'value': format_number(estimate.value),
        'confidence': estimate.confidence.value,
        'windows': [
            {'level': w.level, 'x_start': format_number(w.x_start), 'x_end': format_number(w.x_end),
             'value': format_number(w.value)}
            for w in estimate.windows
        ],
    }


def condition_to_dict(report: ConditionReport) -> Dict[str, Any]:
    return {
        'condition_id': report.condition_id,
        'verdict': report.verdict.value,
        'detail': report.detail,
        'value': format_number(report.value) if report.value is not None else None,
        'parameters': to_jsonable(report.parameters),
        'estimate': estimate_to_dict(report.estimate),
        'trace_points': int(report.trace[0].size) if report.trace is not None else 0,
    }


def tags_to_dict(tags: WeightClassTags) -> Dict[str, Any]:
    return {
        'classes': tags.names(),
        'regular_limit': format_number(tags.regular_limit) if tags.regular_limit is not None else None,
        'evidence': {name: condition_to_dict(report) for name, report in tags.evidence.items()},
    }


def verdict_to_dict(verdict: OperatorVerdict) -> Dict[str, Any]:
    return {
        'operator': verdict.operator.value,
        'v': verdict.v_label,
        'w': verdict.w_label,
        'verdict': verdict.verdict.value,
        'justification_id': verdict.justification_id,
        'justification': verdict.justification,
        'norm_lower_bound': format_number(verdict.norm_lower_bound),
        'upper_bound_if_bounded': format_number(verdict.upper_bound) if verdict.upper_bound is not None else None,
        'warnings': list(verdict.warnings),
        'evidence': [condition_to_dict(r) for r in verdict.evidence],
    }


def weight_to_dict(w: RadialWeight) -> Dict[str, Any]:
    data = {
        'label': w.label,
        'domain': w.domain.name,
        'source': w.source.value,
        'family': w.family,
        'params': to_jsonable(w.params),
        'horizon': format_number(w.horizon) if w.horizon is not None else None,
        'smooth': w.smooth,
        'tags': sorted(w.tags),
    }
    if w.equivalent is not None:
        data['equivalent'] = {'label': w.equivalent.weight.label,
                              'log_constant': format_number(w.equivalent.log_constant),
                              'note': w.equivalent.note}
    return data


def bundle_to_dict(bundle: CounterexampleBundle) -> Dict[str, Any]:
    return {
        'name': bundle.name,
        'v': weight_to_dict(bundle.v),
        'v_bar': weight_to_dict(bundle.v_bar),
        'constants': to_jsonable(bundle.constants),
        'breakpoints': len(bundle.breakpoints),
        'notes': list(bundle.notes),
    }


def gap_to_dict(gap: GapCheck) -> Dict[str, Any]:
    return {
        'name': gap.name,
        'passed': gap.passed,
        'detail': gap.detail,
        'evidence': [condition_to_dict(r) for r in gap.reports],
    }


def norms_rows(m: MonomialNorms) -> List[Tuple[Any, ...]]:
    """(n, A_n, x_n, grid_limited) rows"""
    return [(n, float(m.A[n]), float(m.maximizers[n]), bool(m.grid_limited[n])) for n in range(m.A.size)]


def document_to_dict(doc: ReportDocument) -> Dict[str, Any]:
    """Fixed field order so identical requests serialise identically"""
    return {
        'schema_version': doc.schema_version,
        'command': doc.command,
        'inputs': to_jsonable(doc.inputs),
        'settings': to_jsonable(doc.settings),
        **{name: to_jsonable(section) for name, section in doc.sections.items()},
        'traces': sorted(doc.traces),
        'exit_code': doc.exit_code,
    }


def dumps_report(doc: ReportDocument) -> str:
    return json.dumps(document_to_dict(doc), indent=2, ensure_ascii=False)


def error_document(error: WeightLabError, command: str, inputs: Dict[str, Any], exit_code: int) -> Dict[str, Any]:
    return {'schema_version': SCHEMA_VERSION, 'command': command, 'inputs': to_jsonable(inputs),
            'error': to_jsonable(error.to_dict()), 'exit_code': exit_code}


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def trace_name(*parts: str) -> str:
    """File-safe trace name built from section and condition ids"""
    return _UNSAFE.sub("_", "_".join(p for p in parts if p)).strip("_") or "trace"


def condition_trace(report: ConditionReport) -> Optional[Tuple[List[str], List[Tuple[float, ...]]]]:
    """(x, value) rows exactly on the grid the condition was evaluated on"""
    if report.trace is None:
        return None
    xs, values = report.trace
    return list(TRACE_HEADERS), [(float(x), float(y)) for x, y in zip(xs, values)]


def add_condition_traces(traces: Dict[str, Tuple[List[str], List[Tuple[float, ...]]]], prefix: str,
                         reports: Iterable[ConditionReport]) -> None:
    for report in reports:
        rows = condition_trace(report)
        if rows is None:
            continue
        name = trace_name(prefix, report.condition_id)
        suffix = 2
        while name in traces:
            name = trace_name(prefix, report.condition_id, str(suffix))
            suffix += 1
        traces[name] = rows


def write_csv(path: Path, headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(headers)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return path


def write_outputs(doc: ReportDocument, out_dir: str, write_json: bool = True, write_traces: bool = True) -> List[Path]:
    """report.json plus one CSV per trace under out_dir"""
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    if write_json:
        path = target / "report.json"
        path.write_text(dumps_report(doc) + "\n")
        written.append(path)
    if write_traces:
        for name in sorted(doc.traces):
            headers, rows = doc.traces[name]
            filename = name if name.endswith(".csv") else f"{name}.csv"
            written.append(write_csv(target / filename, headers, rows))
    return written


# ---------------------------------------------------------------------------
# Console output
# ---------------------------------------------------------------------------

class ConsoleReporter:
    """Progress lines on stderr, result tables on stdout"""

    def __init__(self, quiet: bool = False, tables: bool = True, out: Optional[TextIO] = None,
                 err: Optional[TextIO] = None):
        self.quiet = quiet
        self.tables = tables
        self.out = out if out is not None else sys.stdout
        self.err = err if err is not None else sys.stderr

    def progress(self, message: str) -> None:
        if not self.quiet:
            print(message, file=self.err)

    def banner(self, title: str) -> None:
        if not self.quiet:
            print("\n" + "=" * 90, file=self.err)
            print(title, file=self.err)
            print("=" * 90, file=self.err)

    def _print(self, text: str = "") -> None:
        if self.tables:
            print(text, file=self.out)

    def print_conditions(self, reports: Sequence[ConditionReport]) -> None:
        self._print(f"{'Condition':<26} {'Verdict':<16} {'Value':<14} Detail")
        self._print("-" * 90)
        for report in reports:
            icon = CONDITION_ICONS[report.verdict]
            value = "-" if report.value is None else f"{report.value:.6g}"
            self._print(f"{report.condition_id:<26} {icon} {report.verdict.value:<13} {value:<14} "
                        f"{report.detail[:60]}")

    def print_verdict(self, verdict: OperatorVerdict) -> None:
        icon = VERDICT_ICONS[verdict.verdict]
        self._print(f"\n{icon} {verdict.operator.value} on ({verdict.v_label}, {verdict.w_label}): "
                    f"{verdict.verdict.value.upper()}")
        self._print(f"   Justification: {verdict.justification_id} | {verdict.justification}")
        self._print(f"   Norm lower bound: {verdict.norm_lower_bound:.6g}")
        if verdict.upper_bound is not None:
            self._print(f"   Upper bound if bounded: {verdict.upper_bound:.6g}")
        for warning in verdict.warnings:
            self._print(f"   ⚠️ {warning}")

    def print_analysis(self, v: RadialWeight, tags: WeightClassTags, reports: Sequence[ConditionReport],
                       verdicts: Sequence[OperatorVerdict]) -> None:
        self._print("\n" + "=" * 90)
        self._print(f"📊 WEIGHT ANALYSIS: {v.label} on the {v.domain.name}")
        self._print("=" * 90)
        self._print(f"🏷️ Classes: {', '.join(tags.names()) or 'none'}")
        if tags.regular_limit is not None:
            self._print(f"📈 Regular with L_v = {tags.regular_limit:.6g}")
        self._print("\n📋 CONDITIONS:")
        self.print_conditions(reports)
        self._print("\n🎯 VERDICTS:")
        for verdict in verdicts:
            self.print_verdict(verdict)

    def print_counterexample(self, bundle: CounterexampleBundle, gaps: Sequence[GapCheck]) -> None:
        self._print("\n" + "=" * 90)
        self._print(f"🧪 COUNTEREXAMPLE {bundle.name}: {bundle.v.label} vs {bundle.v_bar.label}")
        self._print("=" * 90)
        for name, value in bundle.constants.items():
            self._print(f"  {name:<16} {value:.12g}")
        self._print("\n📋 DESIGNED GAPS:")
        self._print(f"{'Check':<30} {'Result':<10} Detail")
        self._print("-" * 90)
        for gap in gaps:
            mark = "✅ pass" if gap.passed else "❌ fail"
            self._print(f"{gap.name:<30} {mark:<10} {gap.detail[:80]}")

    def print_norms(self, m: MonomialNorms, label: str, ratio_report: Optional[ConditionReport] = None,
                    limit: int = 20) -> None:
        self._print("\n" + "=" * 90)
        self._print(f"📐 MONOMIAL NORMS for {label} (N = {m.N})")
        self._print("=" * 90)
        self._print(f"{'n':<8} {'A_n':<20} {'x_n':<20} Grid")
        self._print("-" * 60)
        rows = norms_rows(m)
        shown = rows if len(rows) <= limit else rows[:limit // 2] + rows[-limit // 2:]
        for i, (n, a, x, limited) in enumerate(shown):
            if len(rows) > limit and i == limit // 2:
                self._print("...")
            self._print(f"{n:<8} {a:<20.12g} {x:<20.12g} {'limited' if limited else 'ok'}")
        if ratio_report is not None:
            self._print(f"\n📈 Ratio trend: {ratio_report.detail}")
