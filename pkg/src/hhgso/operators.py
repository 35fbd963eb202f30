"""Per-cluster update operators: Jaya, Sooty Tern, Butterfly, Owl, Henry Gas.

Each ``*_update`` function maps a block of positions (one row per agent in
the cluster) to new positions.  Passing ``bounds`` clamps the result; with
``bounds=None`` the raw formula output is returned.

Random draws are taken in blocks, each block row-major over (agent,
dimension), in this order:

    jaya    r1 (m, d), r2 (m, d)
    stoa    C_B (m), angle (m)
    boa     switch (m), r (m, d), j (m), k (m)
    osa     Ic noise (m), alpha (m), p_vm (m)
    hgso    flag (m), r (m, d)

Scalar draws are one per agent per update.  The r factors are fresh per
dimension; in the Henry Gas step one r per dimension is shared by both
attraction terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Agent, Bounds, RngStream, clamp
from .errors import NumericError

HENRY_GAS = "HenryGas"
JAYA = "Jaya"
SOOTY_TERN = "SootyTern"
BUTTERFLY = "Butterfly"
OWL = "Owl"

ALGORITHMS = (HENRY_GAS, JAYA, SOOTY_TERN, BUTTERFLY, OWL)


@dataclass(frozen=True)
class StoaParams:
    cf: float = 2.0
    u: float = 1.0
    v: float = 1.0


@dataclass(frozen=True)
class BoaParams:
    c: float = 0.01
    a_start: float = 0.1
    a_end: float = 0.2
    switch_p: float = 0.8


@dataclass(frozen=True)
class OsaParams:
    beta_start: float = 1.9
    alpha_max: float = 0.5


@dataclass(frozen=True)
class HgsoParams:
    l1: float = 5e-2
    l2: float = 100.0
    l3: float = 1e-2
    t_theta: float = 298.15
    K: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    epsilon: float = 0.05


@dataclass
class OperatorParams:
    stoa: StoaParams = field(default_factory=StoaParams)
    boa: BoaParams = field(default_factory=BoaParams)
    osa: OsaParams = field(default_factory=OsaParams)
    hgso: HgsoParams = field(default_factory=HgsoParams)


@dataclass
class HgsoCluster:
    """Henry coefficient, dissolution constant and per-agent partial pressures
    of one cluster."""

    henry: float
    dissolution: float
    pressure: np.ndarray


def _finish(x, bounds):
    return x if bounds is None else clamp(x, bounds)


def _check_iter(t, max_iter):
    if max_iter <= 0:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if t > max_iter:
        raise ValueError(f"iteration {t} exceeds max_iter {max_iter}")


def jaya_update(positions, best, worst, rng: RngStream, bounds: Bounds | None = None):
    x = np.array(positions, dtype=float, ndmin=2)
    m, d = x.shape
    r1 = rng.units(m * d).reshape(m, d)
    r2 = rng.units(m * d).reshape(m, d)
    ax = np.abs(x)
    out = x + r1 * (np.asarray(best) - ax) - r2 * (np.asarray(worst) - ax)
    return _finish(out, bounds)


def stoa_update(positions, best, t, max_iter, rng: RngStream,
                params: StoaParams = StoaParams(), bounds: Bounds | None = None):
    _check_iter(t, max_iter)
    x = np.array(positions, dtype=float, ndmin=2)
    m = x.shape[0]
    best = np.asarray(best, dtype=float)
    s_a = params.cf - t * (params.cf / max_iter)
    c_b = 0.5 * rng.units(m)[:, None]
    k = 2.0 * math.pi * rng.units(m)[:, None]
    c_i = s_a * x
    m_i = c_b * (best - x)
    d_i = c_i * m_i
    with np.errstate(over="ignore", invalid="ignore"):
        radius = params.u * np.exp(k * params.v)
        spiral = radius * np.sin(k) + radius * np.cos(k) + radius * k
        out = (d_i * spiral) * best
    return _finish(out, bounds)


def boa_stimulus(costs) -> np.ndarray:
    """Stimulus intensity ``1 / (1 + normalized rank)``; the best agent gets 1."""
    costs = np.asarray(costs, dtype=float)
    m = costs.size
    if m == 1:
        return np.ones(1)
    ranks = np.empty(m)
    ranks[np.argsort(costs, kind="stable")] = np.arange(m)
    return 1.0 / (1.0 + ranks / (m - 1))


def boa_fragrance(intensity, a: float, c: float = 0.01):
    return c * np.power(intensity, a)


def boa_exponent(t, max_iter, params: BoaParams = BoaParams()) -> float:
    return params.a_start + (params.a_end - params.a_start) * t / max_iter


def boa_update(positions, costs, best, t, max_iter, rng: RngStream,
               params: BoaParams = BoaParams(), bounds: Bounds | None = None):
    _check_iter(t, max_iter)
    x = np.array(positions, dtype=float, ndmin=2)
    m, d = x.shape
    frag = boa_fragrance(boa_stimulus(costs), boa_exponent(t, max_iter, params), params.c)
    s = rng.units(m)
    r = rng.units(m * d).reshape(m, d)
    j = rng.ints(m, m)
    k = rng.ints(m, m)
    best = np.asarray(best, dtype=float)
    use_global = (s < params.switch_p) | (m < 2)
    step = np.where(use_global[:, None], r * r * best - x, r * r * x[j] - x[k])
    out = x + step * frag[:, None]
    return _finish(out, bounds)


def owl_intensity(costs) -> np.ndarray:
    costs = np.asarray(costs, dtype=float)
    w, b = costs.min(), costs.max()
    if b == w:
        return np.zeros(costs.size)
    return (costs - w) / (b - w)


def osa_update(positions, costs, best, t, max_iter, rng: RngStream,
               params: OsaParams = OsaParams(), bounds: Bounds | None = None):
    _check_iter(t, max_iter)
    x = np.array(positions, dtype=float, ndmin=2)
    m = x.shape[0]
    prey = np.asarray(best, dtype=float)
    intensity = owl_intensity(costs)
    dist_sq = np.sum((x - prey) ** 2, axis=1)
    noise = rng.units(m)
    alpha = params.alpha_max * rng.units(m)
    p_vm = rng.units(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        change = np.where(dist_sq > 0, intensity / dist_sq, 0.0) + noise
    beta = params.beta_start * (1.0 - t / max_iter)
    sign = np.where(p_vm < 0.5, 1.0, -1.0)
    out = x + (sign * beta * change)[:, None] * np.abs(alpha[:, None] * prey - x)
    return _finish(out, bounds)


def init_hgso_state(cluster_sizes, rng: RngStream,
                    params: HgsoParams = HgsoParams()) -> list[HgsoCluster]:
    """Draw H_j for every cluster, then C_j, then P for every agent."""
    k = len(cluster_sizes)
    henry = params.l1 * rng.units(k)
    dissolution = params.l3 * rng.units(k)
    pressure = params.l2 * rng.units(int(sum(cluster_sizes)))
    out, start = [], 0
    for j, size in enumerate(cluster_sizes):
        out.append(HgsoCluster(float(henry[j]), float(dissolution[j]),
                               pressure[start:start + size].copy()))
        start += size
    return out


def henry_temperature(t, max_iter) -> float:
    return math.exp(-t / max_iter)


def update_henry(henry, dissolution, t, max_iter, t_theta=298.15) -> float:
    temp = henry_temperature(t, max_iter)
    return henry * math.exp(-dissolution * (1.0 / temp - 1.0 / t_theta))


def solubility(henry, pressure, K=1.0):
    return K * henry * np.asarray(pressure)


def hgso_update(positions, costs, cluster_best, best, best_cost, state: HgsoCluster,
                t, max_iter, rng: RngStream, params: HgsoParams = HgsoParams(),
                bounds: Bounds | None = None):
    """Henry Gas step. Updates ``state.henry`` in place, returns positions."""
    _check_iter(t, max_iter)
    x = np.array(positions, dtype=float, ndmin=2)
    m, d = x.shape
    costs = np.asarray(costs, dtype=float)
    if len(state.pressure) != m:
        raise ValueError("partial-pressure vector does not match cluster size")
    state.henry = update_henry(state.henry, state.dissolution, t, max_iter, params.t_theta)
    sol = solubility(state.henry, state.pressure, params.K)
    denom = costs + params.epsilon
    if np.any(denom == 0):
        raise NumericError("fitness + epsilon is zero in the Henry Gas interaction term")
    with np.errstate(over="ignore"):
        gamma = params.beta * np.exp(-(best_cost + params.epsilon) / denom)
    flag = np.where(rng.units(m) < 0.5, -1.0, 1.0)
    r = rng.units(m * d).reshape(m, d)
    fr = flag[:, None] * r
    cluster_best = np.asarray(cluster_best, dtype=float)
    best = np.asarray(best, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = (x + fr * gamma[:, None] * (cluster_best - x)
               + fr * params.alpha * (sol[:, None] * best - x))
    return _finish(out, bounds)


@dataclass
class ClusterContext:
    """What an operator may see when updating one cluster.

    ``positions`` and ``costs`` are copies of the cluster's slice.
    """

    positions: np.ndarray
    costs: np.ndarray
    cluster_best: Agent
    global_best: Agent
    global_worst: Agent
    t: int
    max_iter: int
    bounds: Bounds
    hgso: HgsoCluster


def _run_jaya(ctx, rng, params):
    return jaya_update(ctx.positions, ctx.global_best.position, ctx.global_worst.position,
                       rng, ctx.bounds)


def _run_stoa(ctx, rng, params):
    return stoa_update(ctx.positions, ctx.global_best.position, ctx.t, ctx.max_iter, rng,
                       params.stoa, ctx.bounds)


def _run_boa(ctx, rng, params):
    return boa_update(ctx.positions, ctx.costs, ctx.global_best.position, ctx.t,
                      ctx.max_iter, rng, params.boa, ctx.bounds)


def _run_osa(ctx, rng, params):
    return osa_update(ctx.positions, ctx.costs, ctx.global_best.position, ctx.t,
                      ctx.max_iter, rng, params.osa, ctx.bounds)


def _run_hgso(ctx, rng, params):
    return hgso_update(ctx.positions, ctx.costs, ctx.cluster_best.position,
                       ctx.global_best.position, ctx.global_best.fitness, ctx.hgso,
                       ctx.t, ctx.max_iter, rng, params.hgso, ctx.bounds)


UPDATERS: dict[str, Callable[[ClusterContext, RngStream, OperatorParams], np.ndarray]] = {
    HENRY_GAS: _run_hgso,
    JAYA: _run_jaya,
    SOOTY_TERN: _run_stoa,
    BUTTERFLY: _run_boa,
    OWL: _run_osa,
}
