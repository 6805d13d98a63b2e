#!/usr/bin/env python3
"""
CLI entry points for weightlab
Analyze radial weights and decide boundedness of differentiation and integration

Usage:
  weightlab analyze "power_disc(2)@disc"
  weightlab verdict D "power_disc(1)@disc" auto:v-over-1-minus-r
  weightlab counterexample ex1 --out results/
  weightlab norms "exp_plane(1)@plane" --N 50 --op D --w same
"""

import argparse
import json
import sys
from typing import List, Optional

from weightlab.config import AnalysisSettings
from weightlab.models import ParseError, WeightLabError
from weightlab.orchestrator import WeightLabOrchestrator
from weightlab.reporting import ConsoleReporter, dumps_report, error_document, write_outputs

EXIT_ERROR = 3
EXIT_UNEXPECTED = 4
EXIT_INTERRUPTED = 130


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors become ParseError so they map to the error exit code"""

    def error(self, message: str):
        raise ParseError(message, details={'usage': self.format_usage().strip()})


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--grid-depth', type=int, help="dyadic levels J of the disc grid")
    parser.add_argument('--points-per-level', type=int, help="grid points per dyadic level")
    parser.add_argument('--N', type=int, dest='N', help="highest monomial order")
    parser.add_argument('--out', '--trace-dir', dest='out', help="directory for report.json and CSV traces")
    parser.add_argument('--json', action='store_true', help="print the JSON report on stdout")
    parser.add_argument('--csv', action='store_true', help="write CSV traces (to --out, else the current directory)")
    parser.add_argument('--quiet', action='store_true', help="suppress progress lines")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='weightlab', description=__doc__.strip().splitlines()[1],
                             formatter_class=argparse.RawDescriptionHelpFormatter)
    commands = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    commands.required = True

    analyze = commands.add_parser('analyze', help="classes, conditions and canonical-pair verdicts")
    analyze.add_argument('weight', help="weight spec, e.g. power_disc(2)@disc or piecewise:<file>.json")
    _add_common(analyze)

    verdict = commands.add_parser('verdict', help="boundedness of D: H_v -> H_w or I: H_w -> H_v")
    verdict.add_argument('op', help="D or I")
    verdict.add_argument('v', help="weight spec of v")
    verdict.add_argument('w', help="weight spec of w, 'same' or auto:v-over-1-minus-r")
    _add_common(verdict)

    example = commands.add_parser('counterexample', help="build a counterexample and check its designed gaps")
    example.add_argument('which', choices=sorted(WeightLabOrchestrator.COUNTEREXAMPLES))
    example.add_argument('--a', help="sequence a_n (ex1, ex2)")
    example.add_argument('--b', help="sequence b_n (ex1, ex2)")
    example.add_argument('--eps', help="sequence eps_n (ex3)")
    example.add_argument('--jumps', help="jump sequence j_n (ex4)")
    example.add_argument('--n-max', type=int, dest='n_max', help="truncation index")
    _add_common(example)

    norms = commands.add_parser('norms', help="log-norms A_n of the monomials and operator ratios")
    norms.add_argument('v', help="weight spec of v")
    norms.add_argument('--op', help="D or I: also emit the ratio trace")
    norms.add_argument('--w', help="partner weight spec (default: canonical partner)")
    _add_common(norms)
    return parser


def load_settings(args: argparse.Namespace) -> AnalysisSettings:
    """Defaults, then WEIGHTLAB_* environment values, then CLI flags"""
    settings = AnalysisSettings.from_env()
    overrides = {'grid_depth': args.grid_depth, 'points_per_level': args.points_per_level}
    if args.N is not None and args.command != 'norms':
        overrides.update(n_disc=args.N, n_plane=args.N)
    return settings.with_overrides(**overrides)


def dispatch(orchestrator: WeightLabOrchestrator, args: argparse.Namespace):
    if args.command == 'analyze':
        return orchestrator.run_analyze(args.weight)
    if args.command == 'verdict':
        return orchestrator.run_verdict(args.op, args.v, args.w)
    if args.command == 'counterexample':
        return orchestrator.run_counterexample(args.which, a=args.a, b=args.b, eps=args.eps, jumps=args.jumps,
                                               n_max=args.n_max)
    return orchestrator.run_norms(args.v, spec_w=args.w, op=args.op, N=args.N)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one request; the return value is the process exit code"""
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        reporter = ConsoleReporter(quiet=args.quiet, tables=not args.json)
        orchestrator = WeightLabOrchestrator(load_settings(args), reporter)
        doc = dispatch(orchestrator, args)

        if args.out or args.csv:
            written = write_outputs(doc, args.out or ".", write_json=bool(args.out), write_traces=True)
            reporter.progress(f"💾 Wrote {len(written)} files to {args.out or '.'}")
        if args.json:
            print(dumps_report(doc))
        return doc.exit_code
    except KeyboardInterrupt:
        print("\n❌ Analysis interrupted by user", file=sys.stderr)
        return EXIT_INTERRUPTED
    except WeightLabError as e:
        print(f"❌ {e.name}: {e}", file=sys.stderr)
        if args is not None and getattr(args, 'json', False):
            inputs = {k: v for k, v in vars(args).items() if v is not None and k not in ('json', 'csv', 'quiet')}
            print(json.dumps(error_document(e, args.command, inputs, EXIT_ERROR), indent=2, ensure_ascii=False))
        return EXIT_ERROR
    except Exception as e:
        print(f"\n❌ Analysis failed: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


def run() -> None:
    """Console-script entry"""
    sys.exit(main())


if __name__ == "__main__":
    run()
