"""Command-line front end.

Subcommands: count, exact, normalize, validate, gen, calibrate.
Exit codes: 0 success, 1 parse/validation error, 2 invalid parameters,
3 brute-force cap exceeded.

With --format json a single JSON document goes to stdout.  Timing fields
are only emitted under --timings so that output for a fixed seed is
byte-identical across invocations and worker counts.
"""

from __future__ import annotations

import argparse
import json
import sys

from .core import BRUTE_FORCE_CAP, CapExceededError, Nfbdd, count_exact, validate
from .fpras import CountReport, approx_count, resolve_workers
from .formats import GenerationError, ParseError, dnf_to_nfbdd, gen_random, parse_dnf, parse_nfbdd, serialize_nfbdd
from .harness import check_guarantee
from .transform import CONSTANT_FALSE, Normalized, normalize

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_PARAMS = 2
EXIT_CAP = 3

EXACT_SMALL_THRESHOLD = 16


def _load_diagram(path: str, dnf: bool):
    with open(path) as fh:
        text = fh.read()
    if dnf:
        return dnf_to_nfbdd(parse_dnf(text))
    return parse_nfbdd(text)


def _print_report(report: CountReport, fmt: str, timings: bool):
    if fmt == "json":
        print(json.dumps(report.to_dict(include_timings=timings), sort_keys=True))
        return
    print(f"estimate      {report.estimate:.6g}")
    print(f"exact         {report.exact if report.exact is not None else '-'}")
    print(f"epsilon       {report.epsilon}")
    print(f"delta         {report.delta}")
    print(f"seed          {report.seed}")
    if report.params:
        p = report.params
        print(f"params        kappa={p.kappa:.6g} n_s={p.n_s} n_t={p.n_t} theta={p.theta} m={p.m}")
    print(f"runs          {len(report.runs)} ({report.interrupted_runs} interrupted)")
    if timings:
        print(f"wall_millis   {report.wall_millis:.1f}")


def cmd_count(args) -> int:
    try:
        B = _load_diagram(args.input, args.dnf)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.epsilon <= 0 or not 0 < args.delta < 1:
        print("error: need epsilon > 0 and delta in (0, 1)", file=sys.stderr)
        return EXIT_PARAMS
    if B is CONSTANT_FALSE:
        report = CountReport(0.0, 0, args.epsilon, args.delta, args.seed, None, [], 0, 0.0)
        _print_report(report, args.format, args.timings)
        return EXIT_OK
    assert isinstance(B, Nfbdd)
    if args.exact_when_small and B.n_vars <= EXACT_SMALL_THRESHOLD:
        exact = count_exact(B)
        report = CountReport(float(exact), exact, args.epsilon, args.delta, args.seed, None, [], 0, 0.0)
        _print_report(report, args.format, args.timings)
        return EXIT_OK
    report = approx_count(B, args.epsilon, args.delta, args.seed, workers=resolve_workers(args.workers))
    if args.trace:
        for i, run in enumerate(report.runs):
            print(f"trace: run {i} estimate={run.estimate:.6g} interrupted={run.interrupted}", file=sys.stderr)
    _print_report(report, args.format, args.timings)
    return EXIT_OK


def cmd_exact(args) -> int:
    try:
        B = _load_diagram(args.input, args.dnf)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if B is CONSTANT_FALSE:
        print(0)
        return EXIT_OK
    try:
        print(count_exact(B, cap=args.cap))
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    return EXIT_OK


def cmd_normalize(args) -> int:
    try:
        B = _load_diagram(args.input, args.dnf)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if B is CONSTANT_FALSE:
        nf = CONSTANT_FALSE
    else:
        nf = normalize(B)
    if nf is CONSTANT_FALSE:
        print("CONSTANT_FALSE")
        return EXIT_OK
    assert isinstance(nf, Normalized)
    text = serialize_nfbdd(nf.diagram)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        with open(args.input) as fh:
            B = parse_nfbdd(fh.read())
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = validate(B)
    if report.ok:
        print("valid")
        return EXIT_OK
    for v in report.violations:
        print(f"violation: {v}")
    return EXIT_PARSE


def cmd_gen(args) -> int:
    try:
        B = gen_random(args.n, args.edges, args.seed)
    except (ValueError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    text = serialize_nfbdd(B)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    corpus = []
    try:
        for path in args.inputs:
            B = _load_diagram(path, args.dnf)
            if B is CONSTANT_FALSE:
                print(f"error: {path} is constant false; nothing to calibrate", file=sys.stderr)
                return EXIT_PARAMS
            corpus.append((path, B))
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.epsilon <= 0 or not 0 < args.delta < 1:
        print("error: need epsilon > 0 and delta in (0, 1)", file=sys.stderr)
        return EXIT_PARAMS
    try:
        report = check_guarantee(
            corpus,
            args.epsilon,
            args.delta,
            args.trials,
            seed=args.seed,
            workers=resolve_workers(args.workers),
            use_theta=not args.no_theta,
        )
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    if args.format == "json":
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        for inst in report.instances:
            print(
                f"{inst.name}: exact={inst.exact} success_rate={inst.success_rate:.3f} "
                f"mean_rel_err={inst.mean_relative_error:.4f} interrupted={inst.interrupted_runs}/{inst.core_runs}"
            )
        print(f"overall interrupt rate: {report.interrupt_rate:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfbdd", description="Approximate model counting for nFBDDs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, dnf=True):
        p.add_argument("input", help="input file")
        if dnf:
            p.add_argument("--dnf", action="store_true", help="input is a DNF formula")

    p = sub.add_parser("count", help="approximate model count with (epsilon, delta) guarantee")
    add_common(p)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--workers", type=int, default=None, help="worker threads (default: NFBDD_THREADS or 1)")
    p.add_argument("--timings", action="store_true", help="include timing fields in the output")
    p.add_argument("--trace", action="store_true", help="per-run diagnostics on stderr")
    p.add_argument(
        "--no-exact-when-small",
        dest="exact_when_small",
        action="store_false",
        help=f"always sample, even for n <= {EXACT_SMALL_THRESHOLD}",
    )
    p.set_defaults(func=cmd_count, exact_when_small=True)

    p = sub.add_parser("exact", help="brute-force exact model count")
    add_common(p)
    p.add_argument("--cap", type=int, default=BRUTE_FORCE_CAP)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("normalize", help="emit the 1-complete 0-reduced alternating form")
    add_common(p)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("validate", help="check structural invariants of an nFBDD file")
    add_common(p, dnf=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen", help="generate a random free instance")
    p.add_argument("n", type=int)
    p.add_argument("edges", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("calibrate", help="statistical check of the (epsilon, delta) guarantee against the oracle")
    p.add_argument("inputs", nargs="+", help="instance files")
    p.add_argument("--dnf", action="store_true", help="inputs are DNF formulas")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-theta", action="store_true", help="disable the interrupt cap (uninterrupted variant)")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
