"""Command-line interface.

Subcommands: ``test`` (one tester run), ``gen`` (emit an instance),
``exact`` (ground-truth certificate), ``experiment`` (config file -> report),
``sweep`` (query-count scaling), ``verify`` (built-in property checks).

Exit codes: 0 accept/pass, 1 reject, 2 verification failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import generators, groundtruth, harness, testers
from .domain import (
    CountingOracle,
    DomainError,
    dense_from_json,
    function_to_json,
)

USAGE_ERROR = 64
# gen emits a dense table up to this size, a parameter record beyond it
DENSE_EMIT_CAP = 1 << 16


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _write_out(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        print(text)


def _load_family(arg: str) -> dict:
    spec = json.loads(arg)
    if not isinstance(spec, dict) or "family" not in spec:
        raise DomainError('family spec must be a JSON object with a "family" key')
    return spec


def _load_function(args, rng):
    if args.fn:
        with open(args.fn) as fh:
            return dense_from_json(json.load(fh))
    fn, _ = harness.make_instance(_load_family(args.family), rng)
    return fn


def cmd_test(args) -> int:
    rng = harness.trial_rng(args.seed, 0)
    fn = _load_function(args, rng)
    oracle = CountingOracle(fn, record_transcript=False)
    verdict = testers.TESTERS[args.tester](oracle, args.eps, rng)
    _write_out(json.dumps(verdict.to_json(seed=args.seed), indent=2), args.out)
    return 0 if verdict.decision is testers.Decision.ACCEPT else 1


def cmd_gen(args) -> int:
    spec = _load_family(args.family)
    rng = harness.trial_rng(args.seed, 0)
    fn, _ = harness.make_instance(spec, rng)
    if fn.shape.size <= DENSE_EMIT_CAP:
        doc = function_to_json(fn)
    else:
        doc = dict(spec, seed=args.seed)
    _write_out(json.dumps(doc, indent=2), args.out)
    return 0


def cmd_exact(args) -> int:
    with open(args.fn) as fh:
        fn = dense_from_json(json.load(fh))
    cert = groundtruth.dist_unate_exact(fn)
    profile = groundtruth.mu_profile(fn)
    doc = cert.to_json()
    doc["mu"] = [[m.numerator, m.denominator] for m in profile.mu]
    _write_out(json.dumps(doc, indent=2), args.out)
    return 0


def cmd_experiment(args) -> int:
    with open(args.config) as fh:
        doc = json.load(fh)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.jobs is not None:
        doc["jobs"] = args.jobs
    config = harness.ExperimentConfig.from_json(doc)
    report = harness.run_experiment(config)
    _write_out(json.dumps(report.to_json(), indent=2), args.out)
    return 0


def _parse_int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def cmd_sweep(args) -> int:
    rows = harness.query_scaling_sweep(
        tester=args.tester,
        eps=args.eps,
        d_values=_parse_int_list(args.d) if args.d else (),
        n_values=_parse_int_list(args.n) if args.n else (),
        d=args.fixed_d,
        seed=args.seed,
        trials=args.trials,
    )
    if args.format == "json":
        _write_out(json.dumps(rows, indent=2), args.out)
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
        _write_out(buf.getvalue().rstrip("\n"), args.out)
    return 0


def cmd_verify(args) -> int:
    summary = harness.verify_suite(scope=args.scope, seed=args.seed)
    _write_out(json.dumps(summary, indent=2), args.out)
    return 0 if summary["passed"] else 2


def build_parser() -> _Parser:
    parser = _Parser(prog="unatest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run one tester on a function")
    p.add_argument("tester", choices=harness.TESTER_IDS)
    p.add_argument("--fn", help="dense function JSON file")
    p.add_argument("--family", help="family spec JSON string")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(run=cmd_test)

    p = sub.add_parser("gen", help="emit an instance")
    p.add_argument("--family", required=True, help="family spec JSON string")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(run=cmd_gen)

    p = sub.add_parser("exact", help="ground-truth certificate for a function file")
    p.add_argument("--fn", required=True, help="dense function JSON file")
    p.add_argument("--out")
    p.set_defaults(run=cmd_exact)

    p = sub.add_parser("experiment", help="run an experiment config")
    p.add_argument("--config", required=True, help="ExperimentConfig JSON file")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(run=cmd_experiment)

    p = sub.add_parser("sweep", help="query-count scaling sweep")
    p.add_argument("--tester", required=True, choices=harness.TESTER_IDS)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--d", help="comma-separated dimension values")
    p.add_argument("--n", help="comma-separated side lengths (needs --fixed-d)")
    p.add_argument("--fixed-d", dest="fixed_d", type=int)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--out")
    p.set_defaults(run=cmd_sweep)

    p = sub.add_parser("verify", help="run the built-in property checks")
    p.add_argument("--scope", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(run=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "test" and bool(args.fn) == bool(args.family):
            parser.error("test needs exactly one of --fn / --family")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args)
    except (DomainError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"unatest: error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
