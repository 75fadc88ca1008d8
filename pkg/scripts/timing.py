"""Wall time of dense similarity and GSL construction versus a sparse propagation.

    python scripts/timing.py --sizes 500,1000,2000,4000 --out results/timings.csv
"""

import argparse
from pathlib import Path

from gsllab.experiments import timing_benchmark, timing_to_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="500,1000,2000,4000")
    p.add_argument("--features", type=int, default=10)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", default="results/timings.csv")
    a = p.parse_args()

    rows = timing_benchmark([int(s) for s in a.sizes.split(",")], a.features, a.reps)
    Path(a.out).parent.mkdir(parents=True, exist_ok=True)
    Path(a.out).write_text(timing_to_csv(rows))
    print(f"{'n':>6} {'sim ms':>9} {'x':>5} {'build ms':>9} {'x':>5} {'spmm ms':>8} {'x':>5}")
    for n, sim, cons, spm, r_sim, r_cons, r_spm in rows:
        print(f"{n:>6} {sim:9.2f} {r_sim:5.2f} {cons:9.2f} {r_cons:5.2f} {spm:8.3f} {r_spm:5.2f}")


if __name__ == "__main__":
    main()
