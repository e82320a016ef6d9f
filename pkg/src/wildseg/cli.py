"""Command-line front end: ``wildseg {detect,path,calibrate,bench,simulate}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical or
calibration failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from .core import PreconditionError, TimeSeries
from .estimation import CalibrationError, ConstantTable, calibrate_tables
from .sdll import SdllConfig, detect, detect_ensemble
from .simlab import BUILTIN_SIGNALS, METHODS, NoiseSpec, format_bench, resolve_signal, run_bench, simulate
from .wbs2 import Wbs2Config, wbs2_solution_path

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_series(path: str, col: str | None = None) -> np.ndarray:
    """One value per line, or column ``col`` (1-based index or header name) of a CSV."""
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    values = []
    if col is None:
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise DataError(f"{path}:{lineno}: not a number: {raw!r}") from None
    else:
        rows = list(csv.reader(text.splitlines()))
        if col.isdigit():
            idx, start = int(col) - 1, 0
            if rows and rows[0] and idx < len(rows[0]):
                try:
                    float(rows[0][idx])
                except ValueError:
                    start = 1  # header row
        else:
            if not rows or col not in rows[0]:
                raise DataError(f"{path}: no column named {col!r}")
            idx, start = rows[0].index(col), 1
        for lineno, row in enumerate(rows[start:], start + 1):
            if not row:
                continue
            try:
                values.append(float(row[idx]))
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: bad value in column {col}: {row!r}") from None
    x = np.array(values)
    if x.size < 2:
        raise DataError(f"{path}: need at least 2 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{path}: non-finite values")
    return x


def _wbs2_cfg(args) -> Wbs2Config:
    return Wbs2Config(args.m_tilde, args.seed, not args.no_full_domain)


def _sdll_cfg(args, T: int) -> SdllConfig:
    constant = args.constant
    if args.table is not None:
        try:
            constant = ConstantTable.load(args.table)(T)
        except (OSError, ValueError) as exc:
            raise DataError(str(exc)) from None
    return SdllConfig(constant, args.level, args.beta, args.sigma)


def cmd_detect(args, out) -> int:
    x = TimeSeries.from_values(read_series(args.input, args.col))
    wcfg, scfg = _wbs2_cfg(args), _sdll_cfg(args, len(x))
    pooled = None
    if args.ensemble > 1:
        model, pooled = detect_ensemble(x, wcfg, scfg, args.ensemble)
    else:
        model = detect(x, wcfg, scfg)
    print(f"N̂={model.n_hat}", file=out)
    print("locations:", " ".join(str(int(b)) for b in model.locations), file=out)
    print("segment\tstart\tend\tmean", file=out)
    starts = np.concatenate(([1], model.locations + 1))
    ends = np.concatenate((model.locations, [len(x)]))
    for i, (a, c) in enumerate(zip(starts, ends), 1):
        print(f"{i}\t{a}\t{c}\t{model.fit[a - 1]:.6g}", file=out)
    if pooled is not None:
        print(f"# pooled locations over {args.ensemble} runs", file=out)
        print("location\tcount", file=out)
        for loc, cnt in sorted(Counter(pooled.tolist()).items()):
            print(f"{loc}\t{cnt}", file=out)
    return 0


def cmd_path(args, out) -> int:
    x = TimeSeries.from_values(read_series(args.input, args.col))
    path = wbs2_solution_path(x, _wbs2_cfg(args))
    print(f"# length={len(path)} T={len(x)}", file=out)
    print("k\ts\te\tb\tstat", file=out)
    for k, p in enumerate(path, 1):
        print(f"{k}\t{p.s}\t{p.e}\t{p.b}\t{p.stat:.10g}", file=out)
    if args.check_complete and not path.is_complete(len(x)):
        print(f"path incomplete: {len(path)} entries for T={len(x)}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.check_sorted and not path.is_sorted():
        print("path stat column is not non-increasing", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def cmd_calibrate(args, out) -> int:
    grid = [int(t) for t in args.grid.split(",")]

    def progress(T, c):
        print(f"calibrated T={T}: C={c:.4f}", file=sys.stderr, flush=True)

    tables = calibrate_tables(grid, args.level or [0.90], args.reps, args.seed, _wbs2_cfg(args), progress)
    for i, table in enumerate(tables):
        if args.out is None:
            out.write(table.to_text())
        else:
            target = Path(args.out)
            if len(tables) > 1:
                target = target.with_name(f"{target.stem}_{round(table.level * 100)}{target.suffix}")
            table.save(target)
            print(f"wrote {target}", file=sys.stderr)
    return 0


def _noise(args) -> NoiseSpec:
    family = "student-t" if args.noise == "t" else "gaussian"
    return NoiseSpec(family, args.sigma, args.df)


def _signal(args):
    try:
        return resolve_signal(args.signal)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from None


def cmd_bench(args, out) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise UsageError(f"unknown method(s) {unknown}; valid: {', '.join(sorted(METHODS))}")
    reports = run_bench(methods, _signal(args), _noise(args), args.reps, args.seed, args.jobs)
    table = format_bench(reports, "\t" if args.sep == "tab" else ",")
    out.write(table)
    if args.out is not None:
        Path(args.out).write_text(table)
    return 0


def cmd_simulate(args, out) -> int:
    values = simulate(_signal(args), _noise(args), args.seed, args.rep)
    text = "".join(f"{v!r}\n" for v in values.tolist())
    if args.out is None:
        out.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wildseg", description="WBS2 change-point detection with SDLL model selection.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def path_flags(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--m-tilde", type=int, default=100)
        sp.add_argument("--no-full-domain", action="store_true", help="do not add the current domain to each random batch")

    def input_flags(sp):
        sp.add_argument("input", help="series file, one value per line ('-' for stdin)")
        sp.add_argument("--col", help="read this CSV column (1-based index or header name)")

    sp = sub.add_parser("detect", help="estimate change-points")
    input_flags(sp)
    path_flags(sp)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--level", type=float, choices=(0.90, 0.95), default=0.90)
    g.add_argument("--constant", type=float, help="explicit threshold constant")
    g.add_argument("--table", help="threshold-constant table file")
    sp.add_argument("--beta", type=float, default=0.3)
    sp.add_argument("--sigma", type=float, help="noise scale (default: MAD estimate)")
    sp.add_argument("--ensemble", type=int, default=1, metavar="R", help="median run of R seeded runs")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("path", help="dump the sorted WBS2 solution path")
    input_flags(sp)
    path_flags(sp)
    sp.add_argument("--check-complete", action="store_true")
    sp.add_argument("--check-sorted", action="store_true")
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("calibrate", help="Monte-Carlo calibration of the threshold constant")
    path_flags(sp)
    sp.add_argument("--grid", default="10,50,100,500,1000,5000,10000")
    sp.add_argument("--level", type=float, action="append", help="coverage level (repeatable)")
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--out", help="output table file")
    sp.set_defaults(func=cmd_calibrate)

    def signal_flags(sp):
        sp.add_argument("--signal", default="extreme.teeth", help=f"{' | '.join(BUILTIN_SIGNALS)} | spec file")
        sp.add_argument("--noise", choices=("gaussian", "t"), default="gaussian")
        sp.add_argument("--sigma", type=float, default=0.3)
        sp.add_argument("--df", type=float)
        sp.add_argument("--seed", type=int, default=1)

    sp = sub.add_parser("bench", help="benchmark methods on a test signal")
    signal_flags(sp)
    sp.add_argument("--reps", type=int, default=100)
    sp.add_argument("--methods", default="wbs2-sdll-90,wbs2-sdll-95")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--sep", choices=("comma", "tab"), default="comma")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("simulate", help="write a noisy realisation of a test signal")
    signal_flags(sp)
    sp.add_argument("--rep", type=int, default=0, help="replicate index")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None, out=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    out = out or sys.stdout
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"wildseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, PreconditionError) as exc:
        print(f"wildseg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CalibrationError, FloatingPointError) as exc:
        print(f"wildseg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"wildseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
