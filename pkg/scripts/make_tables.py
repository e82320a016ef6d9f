"""Regenerate the shipped SDLL threshold-constant tables.

    python scripts/make_tables.py --reps 3000 --out src/wildseg/data
"""

import argparse
import time
from pathlib import Path

from wildseg.estimation import calibrate_tables

GRID = (10, 50, 100, 500, 1000, 5000, 10000)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=2018)
    ap.add_argument("--out", type=Path, default=Path("src/wildseg/data"))
    args = ap.parse_args()

    t0 = time.perf_counter()

    def progress(T, c):
        print(f"T={T:>6}  C(0.90)={c:.4f}  [{time.perf_counter() - t0:.0f}s]", flush=True)

    t90, t95 = calibrate_tables(GRID, (0.90, 0.95), args.reps, args.seed, progress=progress)
    args.out.mkdir(parents=True, exist_ok=True)
    t90.save(args.out / "sdll_constants_90.txt")
    t95.save(args.out / "sdll_constants_95.txt")
    print(t90.to_text())
    print(t95.to_text())


if __name__ == "__main__":
    main()
