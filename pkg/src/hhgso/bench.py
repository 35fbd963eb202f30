"""Repeated seeded runs, summary statistics and CSV/JSON reports."""

from __future__ import annotations

import csv
import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .covering import CoveringSpec, generate_array, parse_spec, verify_array
from .engine import EngineConfig, run
from .errors import HHGSOError
from .operators import ALGORITHMS, BUTTERFLY, HENRY_GAS, JAYA, OWL, SOOTY_TERN
from .team import TeamInstance, decode, load_expert_pool, make_objective

TEAM = "team"
CA = "ca"

FRACTION_ORDER = (HENRY_GAS, JAYA, SOOTY_TERN, BUTTERFLY, OWL)
CSV_COLUMNS = (["problem", "seed", "best_cost", "size_metric", "evaluations", "time_ms"]
               + [f"frac_{a}" for a in FRACTION_ORDER])


@dataclass
class ExperimentConfig:
    problem: str
    engine: EngineConfig
    runs: int = 30
    dataset: str | None = None
    skills: list = field(default_factory=list)
    spec: str | None = None
    out: str | None = None
    format: str = "csv"
    workers: int = 1
    trace: bool = False
    verify: bool = False
    array_out: str | None = None

    def __post_init__(self):
        if self.problem not in (TEAM, CA):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.problem == TEAM and (not self.dataset or not self.skills):
            raise ValueError("team problem needs a dataset and required skills")
        if self.problem == CA and not self.spec:
            raise ValueError("ca problem needs a covering-array spec")
        self.engine.validate()

    @property
    def seeds(self) -> list:
        return list(range(self.engine.seed, self.engine.seed + self.runs))


@dataclass
class RunRecord:
    problem: str
    seed: int
    best_cost: float | None = None
    size_metric: int | None = None
    evaluations: int | None = None
    time_ms: float | None = None
    fractions: dict = field(default_factory=dict)
    error: str | None = None
    trace: list = field(default_factory=list)
    solution: object = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def row(self) -> dict:
        out = {
            "problem": self.problem,
            "seed": self.seed,
            "best_cost": self.best_cost,
            "size_metric": self.size_metric,
            "evaluations": self.evaluations,
            "time_ms": self.time_ms,
        }
        for a in FRACTION_ORDER:
            out[f"frac_{a}"] = self.fractions.get(a) if self.ok else None
        return out


def summarize(records) -> dict:
    good = [r for r in records if r.ok]
    out = {"runs": len(records), "failed": len(records) - len(good)}
    if not good:
        return out
    costs = [r.best_cost for r in good]
    out.update(
        best=min(costs),
        worst=max(costs),
        mean=statistics.fmean(costs),
        std=statistics.stdev(costs) if len(costs) > 1 else 0.0,
        mean_size=statistics.fmean(r.size_metric for r in good),
        mean_time_ms=statistics.fmean(r.time_ms for r in good),
        mean_evaluations=statistics.fmean(r.evaluations for r in good),
        mean_distribution={a: statistics.fmean(r.fractions[a] for r in good)
                           for a in FRACTION_ORDER},
    )
    return out


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list

    @property
    def summary(self) -> dict:
        return summarize(self.records)

    @property
    def best_record(self) -> RunRecord | None:
        good = [r for r in self.records if r.ok]
        return min(good, key=lambda r: (r.best_cost, r.seed)) if good else None


def _fractions(counts) -> dict:
    total = sum(counts.values())
    return {a: (counts.get(a, 0) / total if total else 0.0) for a in ALGORITHMS}


def _run_team(instance: TeamInstance, cfg: EngineConfig) -> RunRecord:
    t0 = time.monotonic()
    result = run(cfg, make_objective(instance))
    ms = (time.monotonic() - t0) * 1000.0
    team = decode(result.best_agent.position, instance)
    return RunRecord(TEAM, cfg.seed, team.cost, team.size, result.evaluations_used, ms,
                     _fractions(result.execution_counts),
                     trace=list(enumerate(result.trace)),
                     solution=[instance.pool.experts[m].name for m in team.members])


def _run_ca(spec: CoveringSpec, cfg: EngineConfig, verify: bool) -> RunRecord:
    t0 = time.monotonic()
    array = generate_array(spec, cfg)
    ms = (time.monotonic() - t0) * 1000.0
    if verify:
        ok, missing = verify_array(array, spec)
        if not ok:
            raise HHGSOError(f"generated array misses tuple {missing}")
    return RunRecord(CA, cfg.seed, float(array.size), array.size, array.evaluations, ms,
                     _fractions(array.execution_counts),
                     trace=list(enumerate(array.remaining, start=1)), solution=array)


def _run_one(problem, payload, cfg: EngineConfig, verify: bool) -> RunRecord:
    try:
        if problem == TEAM:
            return _run_team(payload, cfg)
        return _run_ca(payload, cfg, verify)
    except Exception as exc:  # recorded per run; the report is still emitted
        return RunRecord(problem, cfg.seed, error=f"{type(exc).__name__}: {exc}")


def build_payload(config: ExperimentConfig):
    if config.problem == TEAM:
        return TeamInstance(load_expert_pool(config.dataset), config.skills)
    return parse_spec(config.spec)


def run_experiment(config: ExperimentConfig, payload=None) -> ExperimentReport:
    """Run ``config.runs`` seeds (``seed``, ``seed+1``, ...); records come back
    in seed order."""
    payload = payload if payload is not None else build_payload(config)
    cfgs = [replace(config.engine, seed=s) for s in config.seeds]
    args = [(config.problem, payload, c, config.verify) for c in cfgs]
    if config.workers == 1:
        records = [_run_one(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_one, *zip(*args)))
    records.sort(key=lambda r: r.seed)
    return ExperimentReport(config, records)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in records:
            w.writerow({k: _fmt(v) for k, v in r.row().items()})


def read_csv(path) -> list:
    """Load per-run records written by :func:`write_csv`; empty cells mark a failed run."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            failed = row["best_cost"] == ""
            out.append(RunRecord(
                problem=row["problem"],
                seed=int(row["seed"]),
                best_cost=None if failed else float(row["best_cost"]),
                size_metric=None if failed else int(row["size_metric"]),
                evaluations=None if failed else int(row["evaluations"]),
                time_ms=None if failed else float(row["time_ms"]),
                fractions={} if failed else {a: float(row[f"frac_{a}"]) for a in FRACTION_ORDER},
                error="failed" if failed else None,
            ))
    return out


def report_dict(report: ExperimentReport) -> dict:
    return {"records": [r.row() for r in report.records], "summary": report.summary}


def write_traces(report: ExperimentReport, path) -> list:
    written = []
    for k, r in enumerate(report.records):
        if not r.ok:
            continue
        tpath = f"{path}.run{k}.trace.csv"
        with open(tpath, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "best_cost"])
            for it, cost in r.trace:
                w.writerow([it, _fmt(float(cost))])
        written.append(tpath)
    return written


def emit_report(report: ExperimentReport, fmt: str, path, trace: bool = False) -> None:
    try:
        if fmt == "csv":
            write_csv(report.records, path)
        elif fmt == "json":
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(report_dict(report), fh, indent=2)
                fh.write("\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        if trace:
            write_traces(report, path)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def format_summary(report: ExperimentReport) -> str:
    s = report.summary
    cfg = report.config
    what = cfg.spec if cfg.problem == CA else f"{cfg.dataset} ({len(cfg.skills)} skills)"
    lines = [f"{cfg.problem} {what}: {s['runs']} runs, {s['failed']} failed"]
    if "best" in s:
        lines.append(f"  best {s['best']:.4f}  worst {s['worst']:.4f}  "
                     f"mean {s['mean']:.4f}  std {s['std']:.4f}")
        lines.append(f"  mean size {s['mean_size']:.2f}  mean time {s['mean_time_ms']:.1f} ms  "
                     f"mean evals {s['mean_evaluations']:.1f}")
        dist = "  ".join(f"{a} {100 * v:.2f}%" for a, v in s["mean_distribution"].items())
        lines.append(f"  execution distribution: {dist}")
        best = report.best_record
        if cfg.problem == TEAM and best is not None:
            lines.append(f"  best team (seed {best.seed}): {', '.join(best.solution)}")
    for r in report.records:
        if not r.ok:
            lines.append(f"  seed {r.seed} failed: {r.error}")
    return "\n".join(lines)

