import csv
import io
import json
import math

import numpy as np
import pytest

from weightlab.models import (
    ConditionReport, ConditionVerdict, Operator, OperatorVerdict, ParseError, ReportDocument, Verdict, WeightInvalid,
)
from weightlab.orchestrator import WeightLabOrchestrator
from weightlab.reporting import (
    ConsoleReporter, add_condition_traces, document_to_dict, dumps_report, error_document, format_cell, format_number,
    to_jsonable, trace_name, write_outputs,
)


def _report(condition_id, xs=None, values=None):
    trace = None if xs is None else (np.asarray(xs, dtype=float), np.asarray(values, dtype=float))
    return ConditionReport(condition_id, ConditionVerdict.HOLDS, "ok", value=1.0, trace=trace)


class TestNumbers:
    def test_format_number(self):
        assert format_number(1.0 / 3.0) == 0.333333333333
        assert format_number(math.inf) == "inf"
        assert format_number(-math.inf) == "-inf"
        assert format_number(math.nan) == "nan"
        assert format_number(np.int64(7)) == 7
        assert format_number(np.bool_(True)) is True
        assert format_number(-0.0) == 0.0

    def test_format_cell(self):
        assert format_cell(True) == "1"
        assert format_cell(0.1) == "0.1"
        assert format_cell(12) == "12"
        assert format_cell(float("-inf")) == "-inf"
        assert format_cell(2.0 / 3.0) == "0.666666666667"

    def test_to_jsonable(self):
        data = to_jsonable({'verdict': Verdict.BOUNDED, 'values': np.array([1.0, np.nan]), 'tags': {'b', 'a'},
                            'op': Operator.I, 'nested': (1, None)})
        assert data == {'verdict': 'bounded', 'values': [1.0, 'nan'], 'tags': ['a', 'b'], 'op': 'I',
                        'nested': [1, None]}


class TestTraces:
    def test_trace_name(self):
        assert trace_name("class", "disc_d.i") == "class_disc_d.i"
        assert trace_name("", "a b/c") == "a_b_c"
        assert trace_name("", "") == "trace"

    def test_duplicate_ids_get_suffixes(self):
        traces = {}
        add_condition_traces(traces, "", [_report("integral", [0.0], [1.0]), _report("integral", [1.0], [2.0]),
                                          _report("no_trace")])
        assert sorted(traces) == ["integral", "integral_2"]
        assert traces["integral_2"] == (["x", "value"], [(1.0, 2.0)])


class TestDocuments:
    def _doc(self):
        doc = ReportDocument(command="demo", inputs={'weight': "power_disc(1)@disc"}, settings={'grid_depth': 40})
        doc.sections = {'value': 1.0 / 3.0}
        doc.traces = {'b': (["x", "value"], [(0.0, math.inf)]), 'a': (["x", "value"], [(0.5, 0.25)])}
        return doc

    def test_field_order(self):
        data = document_to_dict(self._doc())
        assert list(data) == ['schema_version', 'command', 'inputs', 'settings', 'value', 'traces', 'exit_code']
        assert data['traces'] == ['a', 'b']

    def test_dumps_is_stable(self):
        assert dumps_report(self._doc()) == dumps_report(self._doc())
        assert json.loads(dumps_report(self._doc()))['value'] == 0.333333333333

    def test_write_outputs(self, tmp_path):
        written = write_outputs(self._doc(), str(tmp_path / "out"))
        assert [p.name for p in written] == ["report.json", "a.csv", "b.csv"]
        with open(tmp_path / "out" / "b.csv", newline="") as f:
            assert list(csv.reader(f)) == [["x", "value"], ["0", "inf"]]

    def test_traces_only(self, tmp_path):
        written = write_outputs(self._doc(), str(tmp_path), write_json=False)
        assert not (tmp_path / "report.json").exists()
        assert len(written) == 2

    def test_error_document(self):
        error = WeightInvalid("flat", invariant="v -> infinity as r -> 1")
        data = error_document(error, "analyze", {'weight': "x"}, 3)
        assert data['error']['error_type'] == 'WeightInvalid'
        assert data['error']['invariant'] == "v -> infinity as r -> 1"
        assert data['exit_code'] == 3

    def test_analyze_document_is_deterministic(self):
        first = dumps_report(WeightLabOrchestrator().run_norms("power_disc(1)@disc", N=32, op="I"))
        second = dumps_report(WeightLabOrchestrator().run_norms("power_disc(1)@disc", N=32, op="I"))
        assert first == second

    def test_second_weight_needs_operator(self):
        with pytest.raises(ParseError):
            WeightLabOrchestrator().run_norms("power_disc(1)@disc", spec_w="power_disc(2)@disc")


class TestConsole:
    def test_progress_goes_to_err(self):
        out, err = io.StringIO(), io.StringIO()
        reporter = ConsoleReporter(out=out, err=err)
        reporter.progress("📊 step")
        reporter.print_conditions([_report("disc_d.i")])
        assert "📊 step" in err.getvalue()
        assert "disc_d.i" in out.getvalue()

    def test_quiet_and_tables_off(self):
        out, err = io.StringIO(), io.StringIO()
        reporter = ConsoleReporter(quiet=True, tables=False, out=out, err=err)
        reporter.banner("🚀 ANALYZE")
        reporter.print_verdict(OperatorVerdict(Operator.D, "v", "w", Verdict.BOUNDED, "disc_d.equivalence", "ok", 1.0))
        assert out.getvalue() == ""
        assert err.getvalue() == ""
