"""Test signals, noise, error metrics and the Monte-Carlo benchmark runner."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .baselines import WbsConfig, binseg_detect, wbs_bic_select, wbs_detect_threshold, wbs_solution_path
from .core import ChangePointModel, PreconditionError, TimeSeries, as_series, derive_seed
from .sdll import SdllConfig, detect, detect_ensemble
from .wbs2 import Wbs2Config

log = logging.getLogger(__name__)


class SpecParseError(ValueError):
    pass


def jumps(values: np.ndarray) -> np.ndarray:
    """1-based ``t`` with ``values[t + 1] != values[t]``."""
    return np.flatnonzero(np.diff(values) != 0) + 1


@dataclass(frozen=True, eq=False)
class SignalSpec:
    name: str
    values: np.ndarray
    change_points: np.ndarray = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "change_points", jumps(values))

    @property
    def n_true(self) -> int:
        return int(self.change_points.shape[0])

    @property
    def T(self) -> int:
        return int(self.values.shape[0])

    def same_as(self, other: "SignalSpec") -> bool:
        return (
            self.name == other.name
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.change_points, other.change_points)
        )


def gen_extreme_teeth(T: int = 1000) -> SignalSpec:
    """0 when ``1 <= t mod 10 <= 5``, 1 otherwise; change-points at 5, 10, 15, ..."""
    if T < 10:
        raise PreconditionError("extreme.teeth needs T >= 10")
    r = np.arange(1, T + 1) % 10
    return SignalSpec("extreme.teeth", ((r == 0) | (r >= 6)).astype(float))


def gen_extreme_extreme_teeth() -> SignalSpec:
    """Pattern 0,0,0,0,1,1,1 repeated 100 times (T=700, 199 change-points)."""
    return SignalSpec("extreme.extreme.teeth", np.tile([0.0, 0, 0, 0, 1, 1, 1], 100))


BUILTIN_SIGNALS: dict[str, Callable[[], SignalSpec]] = {
    "extreme.teeth": gen_extreme_teeth,
    "extreme.extreme.teeth": gen_extreme_extreme_teeth,
}


@dataclass(frozen=True)
class NoiseSpec:
    family: str = "gaussian"
    sigma: float = 0.3
    df: float | None = None

    def __post_init__(self):
        if self.family not in ("gaussian", "student-t"):
            raise ValueError(f"unknown noise family {self.family!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.family == "student-t" and (self.df is None or self.df <= 2):
            raise PreconditionError("student-t noise needs df > 2 for a finite variance")


def gen_noise(spec: NoiseSpec, T: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. noise with standard deviation ``spec.sigma``."""
    if spec.sigma == 0:
        return np.zeros(T)
    if spec.family == "gaussian":
        return rng.normal(0.0, spec.sigma, T)
    return rng.standard_t(spec.df, T) * spec.sigma * math.sqrt((spec.df - 2) / spec.df)


def simulate(signal: SignalSpec, noise: NoiseSpec, seed: int, rep: int = 0) -> np.ndarray:
    """Replicate ``rep`` of signal plus noise; identical for identical ``(seed, rep)``."""
    rng = np.random.default_rng(derive_seed(seed, rep))
    return signal.values + gen_noise(noise, signal.T, rng)


@dataclass(frozen=True)
class RepRecord:
    dn: int
    abs_dn: int
    sq_dn: int
    mse_f: float
    elapsed: float


def evaluate(model: ChangePointModel, truth: SignalSpec, data, elapsed: float = 0.0) -> RepRecord:
    data = as_series(data)
    if not (len(data) == truth.T == model.fit.shape[0]):
        raise ValueError("model, truth and data lengths differ")
    dn = model.n_hat - truth.n_true
    return RepRecord(dn, abs(dn), dn * dn, float(np.mean((model.fit - truth.values) ** 2)), elapsed)


@dataclass(frozen=True)
class BenchReport:
    method: str
    bias_n: float
    mae_n: float
    mse_n: float
    mse_f: float
    mean_time_sec: float
    reps: int
    failures: int = 0

    @classmethod
    def aggregate(cls, method: str, records: Sequence[RepRecord], failures: int = 0) -> "BenchReport":
        if not records:
            nan = float("nan")
            return cls(method, nan, nan, nan, nan, nan, 0, failures)
        a = np.array([(r.dn, r.abs_dn, r.sq_dn, r.mse_f, r.elapsed) for r in records], dtype=float)
        m = a.mean(axis=0)
        return cls(method, *map(float, m), len(records), failures)


Method = Callable[[TimeSeries, int], ChangePointModel]


def _wbs2_sdll(level: float, runs: int = 1) -> Method:
    def run(x, seed):
        if runs == 1:
            return detect(x, Wbs2Config(seed=seed), SdllConfig(level=level))
        return detect_ensemble(x, Wbs2Config(seed=seed), SdllConfig(level=level), runs)[0]

    return run


def _wbs_c(c: float) -> Method:
    return lambda x, seed: wbs_detect_threshold(x, WbsConfig(5000, c, seed))


METHODS: dict[str, Method] = {
    "wbs2-sdll-90": _wbs2_sdll(0.90),
    "wbs2-sdll-95": _wbs2_sdll(0.95),
    "wbs2-sdll-90-r9": _wbs2_sdll(0.90, runs=9),
    "wbs2-sdll-95-r9": _wbs2_sdll(0.95, runs=9),
    "wbs-c1.0": _wbs_c(1.0),
    "wbs-c1.3": _wbs_c(1.3),
    "wbs-bic": lambda x, seed: wbs_bic_select(wbs_solution_path(x, WbsConfig(seed=seed)), x),
    "binseg-c1.0": lambda x, seed: binseg_detect(x, 1.0),
}


def run_bench(
    methods: Sequence[str],
    signal: SignalSpec,
    noise: NoiseSpec,
    reps: int = 100,
    seed: int = 1,
    jobs: int = 1,
) -> list[BenchReport]:
    """Paired Monte-Carlo comparison: every method sees the same ``reps`` replicates."""
    if reps < 1:
        raise PreconditionError("reps must be >= 1")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise KeyError(f"unknown methods {unknown}; valid: {sorted(METHODS)}")

    def one_rep(rep: int):
        data = TimeSeries.from_values(simulate(signal, noise, seed, rep))
        method_seed = derive_seed(seed, rep, 1)
        out = {}
        for name in methods:
            try:
                t0 = time.perf_counter()
                model = METHODS[name](data, method_seed)
                elapsed = time.perf_counter() - t0
                out[name] = evaluate(model, signal, data, elapsed)
            except Exception as exc:  # recorded, not fatal
                log.warning("method %s failed on replicate %d: %s", name, rep, exc)
                out[name] = None
        return out

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            per_rep = list(pool.map(one_rep, range(reps)))
    else:
        per_rep = [one_rep(r) for r in range(reps)]

    reports = []
    for name in methods:
        recs = [r[name] for r in per_rep if r[name] is not None]
        reports.append(BenchReport.aggregate(name, recs, reps - len(recs)))
    return reports


BENCH_COLUMNS = ("method", "biasN", "maeN", "mseN", "mseF", "meanTimeSec")


def format_bench(reports: Sequence[BenchReport], sep: str = ",") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=sep, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for r in reports:
        w.writerow(
            [r.method, f"{r.bias_n:.2f}", f"{r.mae_n:.2f}", f"{r.mse_n:.2f}", f"{r.mse_f:.3f}", f"{r.mean_time_sec:.4f}"]
        )
    return buf.getvalue()


def _parse_number(tok: str, source: str, lineno: int, raw: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise SpecParseError(f"{source}:{lineno}: not a number in {raw!r}") from None
    if not math.isfinite(v):
        raise SpecParseError(f"{source}:{lineno}: non-finite value in {raw!r}")
    return v


def parse_signal_spec(text: str, name: str = "signal", source: str = "<spec>") -> SignalSpec:
    """Parse ``segmentLength value`` rows, or a raw one-value-per-line series.

    Blank lines and ``#`` comments are ignored; ``# name=<label>`` sets the name.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("name="):
                name = body[len("name="):].strip()
            continue
        rows.append((lineno, raw, line.split()))
    if not rows:
        raise SpecParseError(f"{source}: no data rows")
    width = len(rows[0][2])
    if width not in (1, 2):
        lineno, raw, _ = rows[0]
        raise SpecParseError(f"{source}:{lineno}: expected 1 or 2 columns, got {raw!r}")
    values = []
    for lineno, raw, parts in rows:
        if len(parts) != width:
            raise SpecParseError(f"{source}:{lineno}: expected {width} column(s), got {raw!r}")
        if width == 1:
            values.append(_parse_number(parts[0], source, lineno, raw))
            continue
        try:
            length = int(parts[0])
        except ValueError:
            raise SpecParseError(f"{source}:{lineno}: segment length must be an integer in {raw!r}") from None
        if length < 1:
            raise SpecParseError(f"{source}:{lineno}: segment length must be >= 1")
        values.extend([_parse_number(parts[1], source, lineno, raw)] * length)
    return SignalSpec(name, np.array(values))


def load_signal_spec(path) -> SignalSpec:
    path = Path(path)
    return parse_signal_spec(path.read_text(), name=path.stem, source=str(path))


def signal_spec_text(signal: SignalSpec) -> str:
    """Run-length encoded ``segmentLength value`` form of ``signal``."""
    bounds = np.concatenate(([0], signal.change_points, [signal.T]))
    lines = [f"# name={signal.name}"]
    for a, c in zip(bounds[:-1], bounds[1:]):
        lines.append(f"{c - a} {float(signal.values[a])!r}")
    return "\n".join(lines) + "\n"


def write_signal_spec(signal: SignalSpec, path) -> None:
    Path(path).write_text(signal_spec_text(signal))


def resolve_signal(name_or_path: str) -> SignalSpec:
    if name_or_path in BUILTIN_SIGNALS:
        return BUILTIN_SIGNALS[name_or_path]()
    path = Path(name_or_path)
    if path.exists():
        return load_signal_spec(path)
    raise KeyError(f"unknown signal {name_or_path!r}; built-ins: {sorted(BUILTIN_SIGNALS)} or a spec file")
