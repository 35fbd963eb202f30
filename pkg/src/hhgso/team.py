"""Team formation as set covering with Jaccard interaction costs.

A solution vector has one coordinate per required skill; coordinate ``d``
selects an expert from that skill's candidate list, so every decoded team
covers all required skills.  The team's cost is the sum of pairwise
interaction costs between its distinct members.
"""

from __future__ import annotations

import itertools
import os
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import MINIMIZE, Bounds, Objective
from .errors import ParseError


@dataclass(frozen=True)
class Expert:
    id: int
    name: str
    skills: frozenset


@dataclass
class ExpertPool:
    experts: list
    skill_index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.skill_index:
            index: dict = {}
            for e in self.experts:
                if not e.skills:
                    raise ValueError(f"expert {e.name!r} has no skills")
                for s in e.skills:
                    index.setdefault(s, []).append(e.id)
            self.skill_index = {s: sorted(ids) for s, ids in index.items()}

    def __len__(self) -> int:
        return len(self.experts)

    @property
    def skills(self) -> list:
        return sorted(self.skill_index)

    @classmethod
    def from_records(cls, records: Iterable) -> "ExpertPool":
        """``records`` yields ``(name, skills)`` pairs."""
        return cls([Expert(i, name, frozenset(skills)) for i, (name, skills) in enumerate(records)])


def load_expert_pool(source) -> ExpertPool:
    """Read ``name<TAB>skill;skill;...`` lines from a path or text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return load_expert_pool(fh)
    records = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        name, sep, rest = line.partition("\t")
        skills = [s.strip() for s in rest.split(";") if s.strip()] if sep else []
        if not skills:
            raise ParseError(f"expert {name.strip()!r} lists no skills", line=lineno)
        records.append((name.strip(), skills))
    if not records:
        raise ValueError("dataset contains no experts")
    return ExpertPool.from_records(records)


def convert_dataset(text: str) -> str:
    """Normalise ``name: skill, skill`` (or already tab-separated) lines."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" in line:
            name, _, rest = line.partition("\t")
            skills = rest.split(";")
        elif ":" in line:
            name, _, rest = line.partition(":")
            skills = re.split(r"[,;]", rest)
        else:
            raise ParseError("expected 'name: skill, skill' or 'name<TAB>skill;skill'",
                             line=lineno)
        skills = list(dict.fromkeys(s.strip() for s in skills if s.strip()))
        if not skills:
            raise ParseError(f"expert {name.strip()!r} lists no skills", line=lineno)
        out.append(f"{name.strip()}\t{';'.join(skills)}")
    return "\n".join(out) + "\n"


def read_skills(spec: str) -> list:
    """Required skills from a file (one per line or comma-separated) or an
    inline comma list."""
    if os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = spec
    skills = [s.strip() for s in re.split(r"[,\n]", text) if s.strip()]
    if not skills:
        raise ValueError(f"no skills found in {spec!r}")
    return list(dict.fromkeys(skills))


def interaction_cost(a, b) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        raise ValueError("interaction cost undefined for two empty skill sets")
    return 1.0 - len(a & b) / len(union)


def team_cost(members, pool: ExpertPool) -> float:
    members = list(members)
    for m in members:
        if not 0 <= m < len(pool):
            raise ValueError(f"unknown expert id {m}")
    return sum(interaction_cost(pool.experts[i].skills, pool.experts[j].skills)
               for i, j in itertools.combinations(members, 2))


@dataclass(frozen=True)
class Team:
    members: tuple
    cost: float

    @property
    def size(self) -> int:
        return len(self.members)


class TeamInstance:
    def __init__(self, pool: ExpertPool, required_skills):
        self.pool = pool
        self.required_skills = list(dict.fromkeys(required_skills))
        if not self.required_skills:
            raise ValueError("at least one required skill is needed")
        missing = [s for s in self.required_skills if s not in pool.skill_index]
        if missing:
            raise ValueError(f"no expert has required skill(s): {missing}")
        self.candidates = [list(pool.skill_index[s]) for s in self.required_skills]
        # dense pairwise cost matrix over every candidate expert
        ids = sorted({i for c in self.candidates for i in c})
        self._local = {e: k for k, e in enumerate(ids)}
        sets = [pool.experts[e].skills for e in ids]
        n = len(ids)
        mat = np.zeros((n, n))
        for a in range(n):
            for b in range(a + 1, n):
                mat[a, b] = mat[b, a] = interaction_cost(sets[a], sets[b])
        self._cost_matrix = mat
        self._cand_local = [np.array([self._local[e] for e in c]) for c in self.candidates]
        self._cand_ids = [np.array(c) for c in self.candidates]
        self._sizes = np.array([len(c) for c in self.candidates])

    @property
    def dimension(self) -> int:
        return len(self.required_skills)

    def _choice(self, position) -> np.ndarray:
        x = np.floor(np.asarray(position, dtype=float))
        return np.clip(x, 0, self._sizes - 1).astype(np.int64)

    def fast_cost(self, position) -> float:
        choice = self._choice(position)
        local = np.unique([self._cand_local[d][k] for d, k in enumerate(choice)])
        if local.size < 2:
            return 0.0
        return float(self._cost_matrix[np.ix_(local, local)].sum() / 2.0)

    def covers(self, members) -> bool:
        have = set().union(*(self.pool.experts[m].skills for m in members))
        return set(self.required_skills) <= have


def decode(position, instance: TeamInstance) -> Team:
    choice = instance._choice(position)
    members = tuple(sorted({int(instance._cand_ids[d][k]) for d, k in enumerate(choice)}))
    return Team(members, team_cost(members, instance.pool))


def make_objective(instance: TeamInstance) -> Objective:
    bounds = Bounds(np.zeros(instance.dimension), instance._sizes - 1e-9)
    return Objective(instance.fast_cost, bounds, direction=MINIMIZE)


def synthetic_pool(n_experts: int, n_skills: int, seed: int = 0,
                   max_skills: int = 4) -> ExpertPool:
    """Random pool where every skill ``s00..`` has at least one expert."""
    rng = np.random.default_rng(seed)
    names = [f"s{k:02d}" for k in range(n_skills)]
    records = []
    for i in range(n_experts):
        k = int(rng.integers(1, max_skills + 1))
        chosen = set(rng.choice(n_skills, size=min(k, n_skills), replace=False).tolist())
        if i < n_skills:
            chosen.add(i)
        records.append((f"expert{i}", [names[c] for c in sorted(chosen)]))
    if n_experts < n_skills:
        for k in range(n_experts, n_skills):
            records[k % n_experts][1].append(names[k])
    return ExpertPool.from_records(records)


def dump_pool(pool: ExpertPool) -> str:
    return "".join(f"{e.name}\t{';'.join(sorted(e.skills))}\n" for e in pool.experts)

