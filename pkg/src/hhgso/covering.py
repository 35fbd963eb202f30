"""t-way covering arrays built one test at a time by the hybrid engine.

Each outer step runs a fresh engine on the coverage objective against the
still-uncovered interaction tuples, commits the best test and removes what
it covers, until nothing is left.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MAXIMIZE, Bounds, Objective
from .engine import EngineConfig, RunResult, run
from .errors import HHGSOError, ParseError, ResourceLimitError
from .operators import ALGORITHMS

DEFAULT_TUPLE_CAP = 50_000_000
TIE_WEIGHT = 0.5


@dataclass(frozen=True)
class CoveringSpec:
    strength: int
    domains: tuple

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(int(v) for v in self.domains))
        if self.strength < 2:
            raise ValueError(f"strength must be >= 2, got {self.strength}")
        if self.strength > len(self.domains):
            raise ValueError(
                f"strength {self.strength} exceeds parameter count {len(self.domains)}")
        if any(v < 2 for v in self.domains):
            raise ValueError(f"every domain needs >= 2 values: {self.domains}")

    @property
    def parameters(self) -> int:
        return len(self.domains)

    @property
    def label(self) -> str:
        groups = [f"{v}^{len(list(g))}" for v, g in itertools.groupby(self.domains)]
        return f"CA({self.strength}, {' '.join(groups)})"

    def tuple_count(self) -> int:
        return sum(math.prod(self.domains[i] for i in c)
                   for c in itertools.combinations(range(self.parameters), self.strength))

    def lower_bound(self) -> int:
        """Product of the ``strength`` largest domains."""
        return math.prod(sorted(self.domains, reverse=True)[:self.strength])


_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<sym>[(),;^])|(?P<word>[A-Za-z]+))")


def _tokens(text):
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", position=pos)
        start = m.start(m.lastgroup)
        yield m.lastgroup, m.group(m.lastgroup), start
        pos = m.end()
    yield "end", "", len(text)


def parse_spec(text: str) -> CoveringSpec:
    """Parse ``CA(t, v^k v^k ...)``; the sized form ``CA(N; t, ...)`` also works."""
    toks = list(_tokens(text))
    i = 0

    def expect(kind, value=None):
        nonlocal i
        k, v, p = toks[i]
        if k != kind or (value is not None and v.upper() != value):
            want = value or kind
            raise ParseError(f"expected {want!r}, found {v or 'end of input'!r}", position=p)
        i += 1
        return v, p

    expect("word", "CA")
    expect("sym", "(")
    if toks[i][0] in ("word", "int") and toks[i + 1][1] == ";":
        i += 2
    t_text, t_pos = expect("int")
    expect("sym", ",")
    domains = []
    while toks[i][0] == "int":
        v = int(toks[i][1])
        v_pos = toks[i][2]
        i += 1
        k = 1
        if toks[i][1] == "^":
            i += 1
            k = int(expect("int")[0])
        if v < 2:
            raise ParseError(f"domain size {v} < 2", position=v_pos)
        domains.extend([v] * k)
    if not domains:
        raise ParseError("no parameter domains given", position=toks[i][2])
    expect("sym", ")")
    expect("end")
    t = int(t_text)
    if t < 2:
        raise ParseError(f"strength {t} < 2", position=t_pos)
    if t > len(domains):
        raise ParseError(f"strength {t} exceeds parameter count {len(domains)}", position=t_pos)
    return CoveringSpec(t, tuple(domains))


@dataclass(frozen=True)
class InteractionTuple:
    columns: tuple
    values: tuple


class TupleSet:
    """Uncovered t-way tuples, stored per column combination as flat flags.

    Also tracks, per (column, value), how many uncovered tuples use it.
    """

    def __init__(self, spec: CoveringSpec, cap: int = DEFAULT_TUPLE_CAP):
        total = spec.tuple_count()
        if total > cap:
            raise ResourceLimitError(
                f"{spec.label} has {total} interaction tuples, above the cap of {cap}")
        self.spec = spec
        t, doms = spec.strength, np.array(spec.domains)
        self.combos = np.array(list(itertools.combinations(range(spec.parameters), t)),
                               dtype=np.int64)
        combo_doms = doms[self.combos]
        # row-major strides within each combination block
        self.strides = np.ones_like(self.combos)
        for k in range(t - 2, -1, -1):
            self.strides[:, k] = self.strides[:, k + 1] * combo_doms[:, k + 1]
        sizes = combo_doms.prod(axis=1)
        self.offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        self.uncovered = np.ones(int(sizes.sum()), dtype=bool)
        self._size = int(sizes.sum())
        self.usage = np.zeros((spec.parameters, int(doms.max())), dtype=np.int64)
        for combo, size in zip(self.combos, sizes):
            for col in combo:
                self.usage[col, :doms[col]] += size // doms[col]

    @classmethod
    def enumerate(cls, spec: CoveringSpec, cap: int = DEFAULT_TUPLE_CAP) -> "TupleSet":
        return cls(spec, cap)

    def __len__(self) -> int:
        return self._size

    def _flat(self, test) -> np.ndarray:
        test = np.asarray(test, dtype=np.int64)
        return self.offsets + (test[self.combos] * self.strides).sum(axis=1)

    def _tuple_index(self, tup: InteractionTuple) -> int:
        cols = tuple(tup.columns)
        if len(cols) != self.spec.strength:
            raise KeyError(tup)
        matches = np.nonzero((self.combos == cols).all(axis=1))[0]
        if len(matches) == 0:
            raise KeyError(tup)
        row = matches[0]
        vals = np.asarray(tup.values)
        if np.any(vals < 0) or np.any(vals >= np.array(self.spec.domains)[list(cols)]):
            raise KeyError(tup)
        return int(self.offsets[row] + (vals * self.strides[row]).sum())

    def __contains__(self, tup: InteractionTuple) -> bool:
        try:
            return bool(self.uncovered[self._tuple_index(tup)])
        except KeyError:
            return False

    def discard(self, tup: InteractionTuple) -> bool:
        idx = self._tuple_index(tup)
        if not self.uncovered[idx]:
            return False
        self.uncovered[idx] = False
        self._size -= 1
        for col, val in zip(tup.columns, tup.values):
            self.usage[col, val] -= 1
        return True

    def coverage(self, test) -> int:
        return int(self.uncovered[self._flat(test)].sum())

    def usage_score(self, test) -> int:
        test = np.asarray(test, dtype=np.int64)
        return int(self.usage[np.arange(len(test)), test].sum())

    def commit(self, test) -> int:
        """Mark everything ``test`` covers; return how many tuples that was."""
        test = np.asarray(test, dtype=np.int64)
        flat = self._flat(test)
        hit = self.uncovered[flat]
        n = int(hit.sum())
        if n:
            self.uncovered[flat[hit]] = False
            self._size -= n
            cols = self.combos[hit].ravel()
            np.subtract.at(self.usage, (cols, test[cols]), 1)
        return n

    def __iter__(self):
        for row, combo in enumerate(self.combos):
            doms = [self.spec.domains[c] for c in combo]
            base = self.offsets[row]
            for k, vals in enumerate(itertools.product(*[range(v) for v in doms])):
                if self.uncovered[base + k]:
                    yield InteractionTuple(tuple(int(c) for c in combo), vals)

    def first(self) -> InteractionTuple | None:
        return next(iter(self), None)


def enumerate_tuples(spec: CoveringSpec, cap: int = DEFAULT_TUPLE_CAP) -> TupleSet:
    return TupleSet(spec, cap)


def coverage_fitness(test, tuples: TupleSet) -> int:
    """Number of still-uncovered tuples that ``test`` covers."""
    if len(tuples) == 0:
        return 0
    return tuples.coverage(test)


def decode_test(position, spec: CoveringSpec) -> np.ndarray:
    doms = np.array(spec.domains)
    x = np.floor(np.asarray(position, dtype=float))
    return np.clip(x, 0, doms - 1).astype(np.int64)


def coverage_objective(spec: CoveringSpec, tuples: TupleSet, tie_break: bool = True) -> Objective:
    """Maximize coverage of ``tuples``.

    With ``tie_break`` a term in [0, TIE_WEIGHT) is added that prefers, among
    equal-coverage tests, the one sharing fewest (column, value) pairs with
    the remaining uncovered tuples.  It never reorders distinct coverages.
    """
    combos = math.comb(spec.parameters, spec.strength)
    bounds = Bounds(np.zeros(spec.parameters), np.array(spec.domains, dtype=float) - 1e-9)
    cache: dict = {}
    norm = spec.strength * len(tuples) + 1

    def value(position):
        test = decode_test(position, spec)
        key = test.tobytes()
        hit = cache.get(key)
        if hit is None:
            hit = float(tuples.coverage(test))
            if tie_break:
                hit += TIE_WEIGHT * (1.0 - tuples.usage_score(test) / norm)
            cache[key] = hit
        return hit

    ceiling = combos + (1 if tie_break else 0)
    return Objective(value, bounds, direction=MAXIMIZE, ceiling=ceiling)


def derive_seed(base_seed: int, row: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(row)]).generate_state(1)[0])


@dataclass
class CoveringArray:
    spec: CoveringSpec
    rows: list = field(default_factory=list)
    seed: int | None = None
    evaluations: int = 0
    execution_counts: dict = field(default_factory=lambda: {a: 0 for a in ALGORITHMS})
    # uncovered-tuple count after each committed row
    remaining: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.rows)

    def to_text(self) -> str:
        head = f"# {self.spec.label} rows={self.size} seed={self.seed}"
        return "\n".join([head] + [" ".join(str(v) for v in r) for r in self.rows]) + "\n"

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.label,
            "strength": self.spec.strength,
            "domains": list(self.spec.domains),
            "rows": self.size,
            "seed": self.seed,
            "array": [list(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_HEADER = re.compile(r"#\s*(CA\(.*\))\s+rows=(\d+)\s+seed=(\S+)")


def read_array_text(text: str) -> CoveringArray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty array file", line=1)
    m = _HEADER.match(lines[0])
    if not m:
        raise ParseError("missing '# CA(...) rows=S seed=...' header", line=1)
    spec = parse_spec(m.group(1))
    rows = [tuple(int(v) for v in ln.split()) for ln in lines[1:]]
    if len(rows) != int(m.group(2)):
        raise ParseError(f"header says {m.group(2)} rows, found {len(rows)}", line=1)
    seed = None if m.group(3) == "None" else int(m.group(3))
    return CoveringArray(spec, rows, seed)


def read_array_json(text: str) -> CoveringArray:
    d = json.loads(text)
    return CoveringArray(parse_spec(d["spec"]), [tuple(r) for r in d["array"]], d.get("seed"))


def _fallback_test(tuples: TupleSet) -> np.ndarray:
    tup = tuples.first()
    test = np.zeros(tuples.spec.parameters, dtype=np.int64)
    test[list(tup.columns)] = tup.values
    return test


def generate_array(spec: CoveringSpec, engine_config: EngineConfig | None = None,
                   tie_break: bool = True, cap: int = DEFAULT_TUPLE_CAP,
                   on_row=None) -> CoveringArray:
    """Build a covering array, one engine run per row.

    ``on_row(row_index, test, covered, result)`` is called after each commit.
    """
    cfg = engine_config or EngineConfig.for_covering()
    tuples = TupleSet(spec, cap)
    out = CoveringArray(spec, seed=cfg.seed)
    row = 0
    while len(tuples):
        objective = coverage_objective(spec, tuples, tie_break)
        result: RunResult = run(replace(cfg, seed=derive_seed(cfg.seed, row)), objective)
        test = decode_test(result.best_agent.position, spec)
        before = len(tuples)
        covered = tuples.commit(test)
        if covered == 0:
            # search never hit an uncovered tuple; complete one directly
            test = _fallback_test(tuples)
            covered = tuples.commit(test)
        if covered == 0 or len(tuples) != before - covered:
            raise HHGSOError("tuple bookkeeping went inconsistent")
        out.rows.append(tuple(int(v) for v in test))
        out.remaining.append(len(tuples))
        out.evaluations += result.evaluations_used
        for a, c in result.execution_counts.items():
            out.execution_counts[a] += c
        if on_row is not None:
            on_row(row, test, covered, result)
        row += 1
    return out


def verify_array(array, spec: CoveringSpec):
    """Check full t-way coverage by brute force.

    Returns ``(True, None)`` or ``(False, first_missing_tuple)``.
    """
    rows = [tuple(r) for r in (array.rows if isinstance(array, CoveringArray) else array)]
    for n, r in enumerate(rows):
        if len(r) != spec.parameters:
            raise ValueError(f"row {n} has {len(r)} values, expected {spec.parameters}")
        for col, (v, dom) in enumerate(zip(r, spec.domains)):
            if not 0 <= v < dom:
                raise ValueError(f"row {n} column {col}: value {v} outside [0, {dom})")
    for combo in itertools.combinations(range(spec.parameters), spec.strength):
        seen = {tuple(r[c] for c in combo) for r in rows}
        for vals in itertools.product(*[range(spec.domains[c]) for c in combo]):
            if vals not in seen:
                return False, InteractionTuple(combo, vals)
    return True, None
