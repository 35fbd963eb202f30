"""Covering-array sizes over seeded runs for a list of specs.

    python3 scripts/ca_sizes.py "CA(2, 3^4)" "CA(2, 2^7)" --runs 30 --out ca.csv
"""

import argparse
import csv
import statistics
import time

from hhgso.covering import generate_array, parse_spec, verify_array
from hhgso.engine import EngineConfig

DEFAULT_SPECS = ["CA(2, 3^4)", "CA(2, 3^5)", "CA(2, 3^6)", "CA(2, 2^7)", "CA(2, 4^4)",
                 "CA(3, 2^6)"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("specs", nargs="*", default=DEFAULT_SPECS)
    ap.add_argument("--runs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--no-tie-break", action="store_true")
    ap.add_argument("--out")
    args = ap.parse_args()

    rows = []
    for text in args.specs:
        spec = parse_spec(text)
        sizes, t0 = [], time.monotonic()
        for seed in range(args.seed, args.seed + args.runs):
            arr = generate_array(spec, EngineConfig.for_covering(seed=seed),
                                 tie_break=not args.no_tie_break)
            assert verify_array(arr, spec)[0]
            sizes.append(arr.size)
        secs = time.monotonic() - t0
        rows.append(dict(spec=spec.label, best=min(sizes), mean=statistics.fmean(sizes),
                         worst=max(sizes), lower_bound=spec.lower_bound(), seconds=secs))
        print(f"{spec.label:24s} best {min(sizes):3d}  mean {statistics.fmean(sizes):6.2f}  "
              f"worst {max(sizes):3d}  (floor {spec.lower_bound()})  {secs:6.1f} s")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
