"""Monte-Carlo comparison on the two teeth signals.

    python scripts/reproduce_tables.py --reps 100 --jobs 4
"""

import argparse
import sys

from wildseg.simlab import NoiseSpec, format_bench, gen_extreme_extreme_teeth, gen_extreme_teeth, run_bench

SETUPS = {
    "extreme.teeth": (gen_extreme_teeth, 0.3),
    "extreme.extreme.teeth": (gen_extreme_extreme_teeth, 0.2),
}
DEFAULT_METHODS = "wbs2-sdll-90,wbs2-sdll-95,wbs2-sdll-90-r9,wbs2-sdll-95-r9,wbs-c1.0,wbs-c1.3,wbs-bic,binseg-c1.0"


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--methods", default=DEFAULT_METHODS)
    args = ap.parse_args()

    methods = args.methods.split(",")
    for name, (gen, sigma) in SETUPS.items():
        print(f"# {name}, gaussian sigma={sigma}, {args.reps} reps", flush=True)
        reports = run_bench(methods, gen(), NoiseSpec(sigma=sigma), args.reps, args.seed, args.jobs)
        sys.stdout.write(format_bench(reports))
        print()


if __name__ == "__main__":
    main()
