"""Hybrid Henry Gas Solubility Optimization with a dynamic operator-to-cluster
mapping, plus team-formation and covering-array problem adapters."""

from .core import Bounds, Objective, Population, ReplayRng, RngStream, clamp, init_population
from .covering import (
    CoveringArray,
    CoveringSpec,
    TupleSet,
    coverage_fitness,
    decode_test,
    enumerate_tuples,
    generate_array,
    parse_spec,
    verify_array,
)
from .engine import EngineConfig, HybridEngine, RunResult, adaptive_probability, run
from .errors import HHGSOError, NumericError, ParseError, ResourceLimitError
from .team import (
    ExpertPool,
    TeamInstance,
    decode,
    interaction_cost,
    load_expert_pool,
    make_objective,
    team_cost,
)

__version__ = "0.1.0"
