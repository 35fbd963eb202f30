"""Hybrid roster against each single-operator roster on a synthetic team instance.

Every roster sees the same seeds, so the comparison is paired.

    python3 scripts/team_rosters.py --experts 200 --skills 20 --runs 30
"""

import argparse
import statistics

from hhgso.engine import DEFAULT_ROSTER, EngineConfig, run
from hhgso.operators import ALGORITHMS
from hhgso.team import TeamInstance, decode, make_objective, synthetic_pool


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--experts", type=int, default=200)
    ap.add_argument("--skills", type=int, default=20)
    ap.add_argument("--max-skills", type=int, default=4, help="skills per expert, at most")
    ap.add_argument("--pool-seed", type=int, default=1)
    ap.add_argument("--runs", type=int, default=30)
    args = ap.parse_args()

    pool = synthetic_pool(args.experts, args.skills, args.pool_seed, args.max_skills)
    inst = TeamInstance(pool, pool.skills)
    obj = make_objective(inst)
    rosters = {"hybrid": DEFAULT_ROSTER} | {a: (a,) for a in ALGORITHMS}
    for name, roster in rosters.items():
        costs, sizes = [], []
        for seed in range(1, args.runs + 1):
            res = run(EngineConfig.for_team(seed=seed, roster=roster), obj)
            team = decode(res.best_agent.position, inst)
            costs.append(team.cost)
            sizes.append(team.size)
        print(f"{name:10s} best {min(costs):8.3f}  mean {statistics.fmean(costs):8.3f}  "
              f"worst {max(costs):8.3f}  mean size {statistics.fmean(sizes):5.2f}")


if __name__ == "__main__":
    main()
