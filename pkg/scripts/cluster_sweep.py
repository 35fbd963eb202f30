"""Effect of the cluster count on covering-array size and operator usage.

    python3 scripts/cluster_sweep.py --spec "CA(2, 3^5)" --clusters 1 2 5 10
"""

import argparse
import statistics

from hhgso.covering import generate_array, parse_spec
from hhgso.engine import EngineConfig
from hhgso.operators import ALGORITHMS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", default="CA(2, 3^5)")
    ap.add_argument("--clusters", type=int, nargs="+", default=[1, 2, 3, 5, 10])
    ap.add_argument("--runs", type=int, default=10)
    args = ap.parse_args()

    spec = parse_spec(args.spec)
    print(f"{spec.label}, {args.runs} runs per setting")
    for k in args.clusters:
        sizes, counts = [], dict.fromkeys(ALGORITHMS, 0)
        for seed in range(1, args.runs + 1):
            arr = generate_array(spec, EngineConfig.for_covering(seed=seed, cluster_count=k))
            sizes.append(arr.size)
            for a, c in arr.execution_counts.items():
                counts[a] += c
        total = sum(counts.values()) or 1
        usage = "  ".join(f"{a} {100 * c / total:5.1f}%" for a, c in counts.items())
        print(f"clusters {k:3d}: mean size {statistics.fmean(sizes):6.2f}  {usage}")


if __name__ == "__main__":
    main()
