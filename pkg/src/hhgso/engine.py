"""Hybrid Henry Gas engine: clustered population, dynamic operator-to-cluster
mapping with a penalize/reward rule, worst-agent restarts and budgets.

RNG consumption per run, in order: initial positions (row-major), Henry Gas
state (H for every cluster, C for every cluster, P for every agent); then
per iteration each cluster's operator draws in cluster order, one unit for
the worst-agent count, one block of ``d`` units per restarted agent, and on
a non-improving iteration one unit for the remap test plus a Fisher-Yates
shuffle when the test fires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .core import Agent, Objective, Population, RngStream, init_population, random_positions
from .errors import NumericError
from .operators import (
    ALGORITHMS,
    BUTTERFLY,
    HENRY_GAS,
    JAYA,
    OWL,
    SOOTY_TERN,
    UPDATERS,
    ClusterContext,
    OperatorParams,
    init_hgso_state,
)

DEFAULT_ROSTER = (JAYA, SOOTY_TERN, OWL, BUTTERFLY, HENRY_GAS)
P_MIN = 0.2
P_MAX = 0.8
WORST_C1 = 0.1
WORST_C2 = 0.2


@dataclass
class EngineConfig:
    population_size: int = 50
    max_iterations: int = 100
    max_fitness_evaluations: int = 2500
    cluster_count: int = 5
    roster: Sequence[str] = DEFAULT_ROSTER
    seed: int = 0
    params: OperatorParams = field(default_factory=OperatorParams)

    def __post_init__(self):
        self.roster = tuple(self.roster)
        self.validate()

    def validate(self):
        if self.cluster_count < 1:
            raise ValueError(f"cluster_count must be >= 1, got {self.cluster_count}")
        if self.population_size < self.cluster_count:
            raise ValueError(
                f"population_size ({self.population_size}) must be >= cluster_count "
                f"({self.cluster_count})")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.max_fitness_evaluations < 0:
            raise ValueError("max_fitness_evaluations must be >= 0")
        if not self.roster:
            raise ValueError("roster must not be empty")
        if len(set(self.roster)) != len(self.roster):
            raise ValueError(f"roster has duplicate entries: {self.roster}")
        unknown = [a for a in self.roster if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithm(s) {unknown}; choose from {ALGORITHMS}")

    @classmethod
    def for_team(cls, **kw) -> "EngineConfig":
        kw.setdefault("population_size", 50)
        kw.setdefault("max_fitness_evaluations", 2500)
        return cls(**kw)

    @classmethod
    def for_covering(cls, **kw) -> "EngineConfig":
        kw.setdefault("population_size", 20)
        kw.setdefault("max_fitness_evaluations", 2000)
        return cls(**kw)


def adaptive_probability(t, max_iter, p_min=P_MIN, p_max=P_MAX) -> float:
    """Remap probability, linear from ``p_max`` at t=0 to ``p_min`` at t=max_iter."""
    if max_iter <= 0:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if not 0 <= t <= max_iter:
        raise ValueError(f"t={t} outside [0, {max_iter}]")
    return p_max + t * (p_min - p_max) / max_iter


@dataclass(frozen=True)
class ClusterView:
    index: int
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start

    @property
    def indices(self) -> range:
        return range(self.start, self.stop)


def partition(population, cluster_count: int) -> list[ClusterView]:
    """Contiguous slices; the first ``n % cluster_count`` get one extra agent."""
    n = population if isinstance(population, int) else len(population)
    if cluster_count < 1:
        raise ValueError(f"cluster_count must be >= 1, got {cluster_count}")
    if n < cluster_count:
        raise ValueError(f"cannot split {n} agents into {cluster_count} clusters")
    base, extra = divmod(n, cluster_count)
    out, start = [], 0
    for j in range(cluster_count):
        size = base + (1 if j < extra else 0)
        out.append(ClusterView(j, start, start + size))
        start += size
    return out


@dataclass(frozen=True)
class MappingState:
    order: tuple
    assignment: tuple
    p_min: float = P_MIN
    p_max: float = P_MAX
    last_global_best: float = math.inf


def _assignment(cluster_count, order):
    if cluster_count <= len(order):
        return tuple(order[:cluster_count])
    return tuple(order) + (HENRY_GAS,) * (cluster_count - len(order))


def assign_algorithms(cluster_count: int, roster: Sequence[str],
                      rng: RngStream | None = None) -> MappingState:
    """Map clusters to roster entries; leftover clusters run Henry Gas.

    With ``rng`` the roster is shuffled first.
    """
    if not roster:
        raise ValueError("roster must not be empty")
    order = tuple(rng.permutation(roster)) if rng is not None else tuple(roster)
    return MappingState(order, _assignment(cluster_count, order))


def maybe_remap(state: MappingState, improved: bool, t, max_iter,
                rng: RngStream) -> MappingState:
    """Keep the mapping after an improvement; otherwise reshuffle with the
    adaptive probability."""
    if improved:
        return state
    p = adaptive_probability(t, max_iter, state.p_min, state.p_max)
    if rng.next_unit() < p:
        order = tuple(rng.permutation(state.order))
        return replace(state, order=order,
                       assignment=_assignment(len(state.assignment), order))
    return state


def worst_count(n: int, u: float, c1=WORST_C1, c2=WORST_C2) -> int:
    return min(n, max(1, math.floor(n * (u * (c2 - c1) + c1))))


def select_worst(population: Population, rng: RngStream) -> list[int]:
    """Indices of the N_w highest-cost agents, worst first, ties to the lower index."""
    n = len(population)
    if n == 0:
        raise ValueError("empty population")
    nw = worst_count(n, rng.next_unit())
    order = np.lexsort((np.arange(n), -population.fitness))
    return [int(i) for i in order[:nw]]


def reinitialize_worst(population: Population, indices, objective: Objective,
                       rng: RngStream, budget: int | None = None) -> bool:
    """Restart the given agents uniformly in the box.

    Returns True when the evaluation budget is exhausted; agents not yet
    restarted at that point are left untouched.
    """
    for i in indices:
        if budget is not None and population.evaluation_count >= budget:
            return True
        population.set_position(i, random_positions(1, objective.bounds, rng)[0])
        population.evaluate(i, objective)
    return budget is not None and population.evaluation_count >= budget


@dataclass
class RunResult:
    best_agent: Agent
    best_cost: float
    best_value: float
    iterations_executed: int
    evaluations_used: int
    execution_counts: dict
    trace: list
    mapping_history: list = field(default_factory=list)
    worst_counts: list = field(default_factory=list)

    @property
    def execution_fractions(self) -> dict:
        total = sum(self.execution_counts.values())
        if total == 0:
            return {a: 0.0 for a in self.execution_counts}
        return {a: c / total for a, c in self.execution_counts.items()}


class HybridEngine:
    """One optimisation run.

    ``observer`` (optional) is called as ``observer(engine, t)`` after every
    completed or interrupted iteration.
    """

    def __init__(self, config: EngineConfig, objective: Objective,
                 observer: Callable | None = None):
        config.validate()
        self.config = config
        self.objective = objective
        self.observer = observer
        self.rng = RngStream(config.seed)
        self.population: Population | None = None
        self.clusters: list[ClusterView] = []
        self.mapping: MappingState | None = None

    def _refresh_cluster_best(self, c: ClusterView):
        sl = slice(c.start, c.stop)
        i = c.start + int(np.argmin(self.population.fitness[sl]))
        if self.population.fitness[i] < self.cluster_best[c.index].fitness:
            self.cluster_best[c.index] = self.population.agent(i)

    def _current_best(self) -> Agent:
        return min(self.cluster_best, key=lambda a: a.fitness)

    def run(self) -> RunResult:
        cfg, obj, rng = self.config, self.objective, self.rng
        budget = cfg.max_fitness_evaluations
        pop = self.population = init_population(cfg.population_size, obj, rng)
        self.clusters = partition(pop, cfg.cluster_count)
        self.hgso_state = init_hgso_state([c.size for c in self.clusters], rng, cfg.params.hgso)
        self.mapping = assign_algorithms(cfg.cluster_count, cfg.roster)
        self.cluster_best = [pop.agent(c.start + int(np.argmin(pop.fitness[c.start:c.stop])))
                             for c in self.clusters]
        self.global_best = self._current_best().copy()
        self.mapping = replace(self.mapping, last_global_best=self.global_best.fitness)

        counts = {a: 0 for a in ALGORITHMS}
        trace = [self.global_best.fitness]
        history, worst_counts = [], []
        iterations = 0
        stopped = pop.evaluation_count >= budget
        t = 0
        while not stopped and t < cfg.max_iterations:
            iterations += 1
            history.append(self.mapping.assignment)
            for c in self.clusters:
                alg = self.mapping.assignment[c.index]
                sl = slice(c.start, c.stop)
                ctx = ClusterContext(
                    positions=pop.positions[sl].copy(),
                    costs=pop.fitness[sl].copy(),
                    cluster_best=self.cluster_best[c.index],
                    global_best=self.global_best,
                    global_worst=pop.agent(pop.worst_index()),
                    t=t,
                    max_iter=cfg.max_iterations,
                    bounds=obj.bounds,
                    hgso=self.hgso_state[c.index],
                )
                try:
                    new = UPDATERS[alg](ctx, rng, cfg.params)
                    counts[alg] += 1
                    for k, i in enumerate(c.indices):
                        pop.set_position(i, new[k])
                        pop.evaluate(i, obj)
                except NumericError as exc:
                    raise NumericError(
                        f"iteration {t}, cluster {c.index}, operator {alg}: {exc}") from exc
                self._refresh_cluster_best(c)
                if pop.evaluation_count >= budget:
                    stopped = True
                    break
            if not stopped:
                worst = select_worst(pop, rng)
                worst_counts.append(len(worst))
                stopped = reinitialize_worst(pop, worst, obj, rng, budget)
                for c in self.clusters:
                    self._refresh_cluster_best(c)
            candidate = self._current_best()
            improved = candidate.fitness < self.global_best.fitness
            if improved:
                self.global_best = candidate.copy()
            trace.append(self.global_best.fitness)
            if not stopped:
                self.mapping = maybe_remap(self.mapping, improved, t, cfg.max_iterations, rng)
                self.mapping = replace(self.mapping, last_global_best=self.global_best.fitness)
            if self.observer is not None:
                self.observer(self, t)
            t += 1

        best = self.global_best.copy()
        return RunResult(
            best_agent=best,
            best_cost=best.fitness,
            best_value=obj.to_value(best.fitness),
            iterations_executed=iterations,
            evaluations_used=pop.evaluation_count,
            execution_counts=counts,
            trace=trace,
            mapping_history=history,
            worst_counts=worst_counts,
        )


def run(config: EngineConfig, objective: Objective, observer: Callable | None = None) -> RunResult:
    return HybridEngine(config, objective, observer).run()
