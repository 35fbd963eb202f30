"""``hhgso`` command line: ``team``, ``ca`` and ``convert-dataset``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

from . import bench
from .covering import parse_spec
from .engine import DEFAULT_ROSTER, EngineConfig
from .errors import HHGSOError, ParseError
from .operators import ALGORITHMS
from .team import convert_dataset, read_skills

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
SEED_ENV = "HHGSO_SEED"
DEFAULT_SEED = 1

# problem -> (population size, evaluation budget)
PROBLEM_DEFAULTS = {bench.TEAM: (50, 2500), bench.CA: (20, 2000)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class ConvertJob:
    src: str
    dst: str


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _non_negative(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _roster(text):
    names = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in names if a not in ALGORITHMS]
    if not names or bad:
        raise argparse.ArgumentTypeError(
            f"unknown algorithm(s) {bad or text!r}; choose from {', '.join(ALGORITHMS)}")
    return tuple(names)


def _add_run_flags(p):
    p.add_argument("--pop", type=_positive, help="population size")
    p.add_argument("--iters", type=_positive, default=100, help="max iterations")
    p.add_argument("--evals", type=_non_negative, help="max fitness evaluations")
    p.add_argument("--clusters", type=_positive, default=5, help="number of clusters")
    p.add_argument("--algorithms", type=_roster, default=DEFAULT_ROSTER,
                   help="comma-separated roster (default: %(default)s)")
    p.add_argument("--runs", type=_positive, default=30)
    p.add_argument("--seed", type=_non_negative,
                   help=f"first seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out", help="report path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--trace", action="store_true",
                   help="also write <out>.run<k>.trace.csv convergence files")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hhgso", description="Hybrid Henry Gas optimisation benchmarks")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    team = sub.add_parser("team", help="team formation on an expert dataset")
    team.add_argument("--dataset", required=True, help="name<TAB>skill;skill file")
    team.add_argument("--skills", required=True, help="skills file or comma-separated list")
    _add_run_flags(team)

    ca = sub.add_parser("ca", help="t-way covering array generation")
    ca.add_argument("--spec", required=True, help='e.g. "CA(2, 3^4)"')
    ca.add_argument("--verify", action="store_true", help="brute-force check each array")
    ca.add_argument("--array-out", help="write the smallest array (.json for JSON, else text)")
    _add_run_flags(ca)

    conv = sub.add_parser("convert-dataset", help="normalise 'name: skill, skill' files")
    conv.add_argument("--in", dest="src", required=True)
    conv.add_argument("--out", dest="dst", required=True)
    return parser


def _resolve_seed(arg):
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is None:
        return DEFAULT_SEED
    try:
        seed = int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    if seed < 0:
        raise UsageError(f"{SEED_ENV} must be non-negative")
    return seed


def parse_cli(argv):
    """Turn argv into an :class:`bench.ExperimentConfig` (or a ConvertJob).

    Raises :class:`UsageError` on anything the user has to fix.
    """
    args = build_parser().parse_args(argv)
    if args.command == "convert-dataset":
        if not os.access(args.src, os.R_OK):
            raise UsageError(f"cannot read {args.src}")
        return ConvertJob(args.src, args.dst)

    problem = bench.TEAM if args.command == "team" else bench.CA
    pop, evals = PROBLEM_DEFAULTS[problem]
    try:
        engine = EngineConfig(
            population_size=args.pop if args.pop is not None else pop,
            max_iterations=args.iters,
            max_fitness_evaluations=args.evals if args.evals is not None else evals,
            cluster_count=args.clusters,
            roster=args.algorithms,
            seed=_resolve_seed(args.seed),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.trace and not args.out:
        raise UsageError("--trace needs --out")

    kw = dict(problem=problem, engine=engine, runs=args.runs, out=args.out,
              format=args.format, workers=args.workers, trace=args.trace)
    if problem == bench.TEAM:
        if not os.access(args.dataset, os.R_OK):
            raise UsageError(f"cannot read dataset {args.dataset}")
        try:
            skills = read_skills(args.skills)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        config = bench.ExperimentConfig(dataset=args.dataset, skills=skills, **kw)
    else:
        try:
            parse_spec(args.spec)
        except ParseError as exc:
            raise UsageError(f"bad --spec: {exc}") from None
        config = bench.ExperimentConfig(spec=args.spec, verify=args.verify,
                                        array_out=args.array_out, **kw)
    return config


def _write_array(report, path):
    best = report.best_record
    if best is None:
        return
    text = best.solution.to_json() if path.endswith(".json") else best.solution.to_text()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_cli(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    try:
        if isinstance(config, ConvertJob):
            with open(config.src, encoding="utf-8") as fh:
                text = convert_dataset(fh.read())
            with open(config.dst, "w", encoding="utf-8") as fh:
                fh.write(text)
            return EXIT_OK

        report = bench.run_experiment(config)
        print(bench.format_summary(report))
        if config.out:
            bench.emit_report(report, config.format, config.out, trace=config.trace)
        if config.array_out:
            _write_array(report, config.array_out)
    except (OSError, ValueError, HHGSOError) as exc:
        print(f"hhgso: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if report.summary["failed"] == len(report.records):
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
