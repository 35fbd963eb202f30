"""Search primitives shared by every operator and by the hybrid engine.

Everything stochastic in the package draws from an :class:`RngStream`.  The
stream exposes scalar draws (``next_unit``/``next_int``) and block draws
(``units``); a block of ``n`` units is the same sequence as ``n`` consecutive
``next_unit`` calls, so a recorded sequence can be replayed through
:class:`ReplayRng` and consumed in either form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericError

MINIMIZE = "minimize"
MAXIMIZE = "maximize"


class RngStream:
    """Seeded uniform stream backed by numpy's PCG64 generator."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def next_unit(self) -> float:
        return float(self._gen.random())

    def units(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def next_int(self, n: int) -> int:
        """Integer in ``[0, n)`` built from exactly one unit draw."""
        if n < 1:
            raise ValueError(f"next_int needs n >= 1, got {n}")
        return min(int(self.next_unit() * n), n - 1)

    def ints(self, n: int, size: int) -> np.ndarray:
        if n < 1:
            raise ValueError(f"ints needs n >= 1, got {n}")
        return np.minimum((self.units(size) * n).astype(np.int64), n - 1)

    def permutation(self, items: Sequence) -> list:
        """Fisher-Yates shuffle (from the last slot down) of a copy of ``items``."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.next_int(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


class ReplayRng(RngStream):
    """Replays a fixed list of unit values; raises once they run out.

    Used to drive operators with hand-chosen random factors in tests.
    """

    def __init__(self, values: Sequence[float]):
        self.seed = 0
        self._values = [float(v) for v in values]
        self._pos = 0

    @property
    def consumed(self) -> int:
        return self._pos

    @property
    def remaining(self) -> int:
        return len(self._values) - self._pos

    def next_unit(self) -> float:
        if self._pos >= len(self._values):
            raise IndexError("replay sequence exhausted")
        v = self._values[self._pos]
        self._pos += 1
        return v

    def units(self, n: int) -> np.ndarray:
        if self._pos + n > len(self._values):
            raise IndexError("replay sequence exhausted")
        out = np.array(self._values[self._pos:self._pos + n], dtype=float)
        self._pos += n
        return out


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ValueError(f"bounds length mismatch: {lower.size} vs {upper.size}")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return self.lower.size

    def contains(self, position) -> bool:
        x = np.asarray(position, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def clamp(position, bounds: Bounds) -> np.ndarray:
    """Project onto the box; NaN components go to the lower bound, +-inf to
    the nearest bound. Works on a single vector or a (n, d) block."""
    x = np.asarray(position, dtype=float)
    if x.shape[-1] != bounds.dimension:
        raise ValueError(
            f"position length {x.shape[-1]} does not match bounds dimension {bounds.dimension}")
    x = np.where(np.isnan(x), bounds.lower, x)
    return np.clip(x, bounds.lower, bounds.upper)


@dataclass
class Objective:
    """A black-box objective over a box.

    The engine minimizes ``cost``.  A maximizing objective is negated; when
    ``ceiling`` (an upper bound of ``func``) is known the cost becomes
    ``ceiling - value`` so it stays non-negative.
    """

    func: Callable[[np.ndarray], float]
    bounds: Bounds
    direction: str = MINIMIZE
    ceiling: float | None = None

    def __post_init__(self):
        if self.direction not in (MINIMIZE, MAXIMIZE):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.bounds.dimension < 1:
            raise ValueError("objective dimension must be >= 1")

    @property
    def dimension(self) -> int:
        return self.bounds.dimension

    def evaluate(self, position) -> float:
        return float(self.func(np.asarray(position, dtype=float)))

    def to_cost(self, value: float) -> float:
        if self.direction == MINIMIZE:
            return value
        if self.ceiling is None:
            return -value
        return self.ceiling - value

    def to_value(self, cost: float) -> float:
        if self.direction == MINIMIZE:
            return cost
        if self.ceiling is None:
            return -cost
        return self.ceiling - cost


@dataclass
class Agent:
    position: np.ndarray
    fitness: float = math.inf
    evaluated: bool = False

    def copy(self) -> "Agent":
        return Agent(self.position.copy(), self.fitness, self.evaluated)


@dataclass
class Population:
    """Agent positions and cached costs stored as arrays.

    ``fitness`` holds canonical (minimization) costs.
    """

    positions: np.ndarray
    fitness: np.ndarray = field(default=None)
    evaluated: np.ndarray = field(default=None)
    evaluation_count: int = 0

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float, ndmin=2)
        n = self.positions.shape[0]
        if self.fitness is None:
            self.fitness = np.full(n, math.inf)
        if self.evaluated is None:
            self.evaluated = np.zeros(n, dtype=bool)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def agent(self, i: int) -> Agent:
        """Detached snapshot of agent ``i``."""
        return Agent(self.positions[i].copy(), float(self.fitness[i]), bool(self.evaluated[i]))

    @property
    def agents(self) -> list[Agent]:
        return [self.agent(i) for i in range(len(self))]

    def set_position(self, i: int, position) -> None:
        self.positions[i] = position
        self.evaluated[i] = False

    def evaluate(self, i: int, objective: Objective) -> float:
        """Evaluate agent ``i``, cache its cost and bump the counter."""
        value = objective.evaluate(self.positions[i])
        self.evaluation_count += 1
        if not math.isfinite(value):
            raise NumericError(f"objective returned {value!r} for agent {i}")
        cost = objective.to_cost(value)
        self.fitness[i] = cost
        self.evaluated[i] = True
        return cost

    def best_index(self) -> int:
        return int(np.argmin(self.fitness))

    def worst_index(self) -> int:
        # argmax returns the lowest index on ties
        return int(np.argmax(self.fitness))


def random_positions(n: int, bounds: Bounds, rng: RngStream) -> np.ndarray:
    """``n`` uniform points in the box, drawn row-major (agent, dimension)."""
    r = rng.units(n * bounds.dimension).reshape(n, bounds.dimension)
    return bounds.lower + r * (bounds.upper - bounds.lower)


def init_population(n: int, objective: Objective, rng: RngStream) -> Population:
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    pop = Population(random_positions(n, objective.bounds, rng))
    for i in range(n):
        pop.evaluate(i, objective)
    return pop
