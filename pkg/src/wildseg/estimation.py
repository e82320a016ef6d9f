"""Noise-scale estimators and the SDLL threshold-constant tables."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from statistics import NormalDist
from typing import Callable, Iterable

import numpy as np

from .core import PreconditionError, as_series, derive_seed
from .wbs2 import Wbs2Config, wbs2_solution_path

log = logging.getLogger(__name__)

MAD_CONSTANT = 1.0 / NormalDist().inv_cdf(0.75)  # 1.4826...
IQR_CONSTANT = 2.0 * NormalDist().inv_cdf(0.75)  # 1.3490...


class CalibrationError(RuntimeError):
    pass


def _scaled_differences(x) -> np.ndarray:
    x = as_series(x)
    if len(x) < 2:
        raise PreconditionError("noise estimation needs T >= 2")
    return np.diff(x.values) / math.sqrt(2.0)


def mad(x) -> float:
    """Gaussian-calibrated MAD of the scaled first differences ``(x_{t+1} - x_t) / sqrt(2)``."""
    d = _scaled_differences(x)
    return float(MAD_CONSTANT * np.median(np.abs(d - np.median(d))))


def iqr_estimator(x) -> float:
    """Gaussian-calibrated inter-quartile range of the scaled first differences."""
    d = _scaled_differences(x)
    q1, q3 = np.percentile(d, [25, 75])
    return float((q3 - q1) / IQR_CONSTANT)


@dataclass(frozen=True, eq=False)
class ConstantTable:
    """Threshold constants ``C(T)`` at anchor sample sizes for one null-coverage level."""

    T: np.ndarray
    c: np.ndarray
    level: float

    def __post_init__(self):
        T = np.asarray(self.T, dtype=np.int64)
        c = np.asarray(self.c, dtype=np.float64)
        if T.size == 0 or T.shape != c.shape:
            raise ValueError("anchor table needs matching, nonempty T and c columns")
        if np.any(np.diff(T) <= 0) or T[0] < 1:
            raise ValueError("anchor T values must be positive and strictly increasing")
        if np.any(c <= 0):
            raise ValueError("threshold constants must be positive")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "c", c)

    def __call__(self, T: int) -> float:
        return interpolate_constant(self, T)

    def to_text(self) -> str:
        lines = [f"# level={self.level:g}"]
        lines += [f"{t} {c:.4f}" for t, c in zip(self.T, self.c)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<table>") -> "ConstantTable":
        level = None
        rows = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("level="):
                    try:
                        level = float(body[len("level="):])
                    except ValueError:
                        raise ValueError(f"{source}:{lineno}: bad level header {raw!r}") from None
                continue
            parts = line.split()
            try:
                if len(parts) != 2:
                    raise ValueError
                rows.append((int(parts[0]), float(parts[1])))
            except ValueError:
                raise ValueError(f"{source}:{lineno}: expected 'T cTilde', got {raw!r}") from None
        if level is None:
            raise ValueError(f"{source}: missing '# level=<p>' header")
        if not rows:
            raise ValueError(f"{source}: no anchor rows")
        T, c = zip(*rows)
        return cls(np.array(T), np.array(c), level)

    @classmethod
    def load(cls, path) -> "ConstantTable":
        path = Path(path)
        return cls.from_text(path.read_text(), str(path))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def interpolate_constant(table: ConstantTable, T: int) -> float:
    """Piecewise-linear in ``log T`` between anchors, constant beyond either end."""
    if T < 1:
        raise PreconditionError("T must be >= 1")
    return float(np.interp(math.log(T), np.log(table.T.astype(float)), table.c))


@lru_cache(maxsize=None)
def default_table(level: float = 0.90) -> ConstantTable:
    """Shipped table for ``level`` 0.90 or 0.95."""
    name = {0.90: "sdll_constants_90.txt", 0.95: "sdll_constants_95.txt"}.get(round(level, 2))
    if name is None:
        raise ValueError(f"no shipped table for level {level}; use 0.90 or 0.95 or pass a table")
    text = resources.files("wildseg").joinpath("data", name).read_text()
    return ConstantTable.from_text(text, name)


def null_ratios(T: int, reps: int, seed: int = 0, cfg: Wbs2Config = Wbs2Config()) -> np.ndarray:
    """Top path statistic over ``sigma_hat * sqrt(2 log T)`` on pure N(0, 1) noise.

    A null replicate yields zero detections exactly when its ratio is below
    the threshold constant, so the level-quantile of these ratios is the
    calibrated constant.
    """
    out = np.empty(reps)
    scale = math.sqrt(2.0 * math.log(T))
    for r in range(reps):
        rep_seed = derive_seed(seed, T, r)
        x = np.random.default_rng(rep_seed).standard_normal(T)
        path = wbs2_solution_path(x, cfg.with_seed(rep_seed))
        out[r] = path.stat[0] / (mad(x) * scale)
    return out


def calibrate_from_ratios(ratios: np.ndarray, level: float, tol: float = 0.005, max_iter: int = 40) -> float:
    """Smallest constant (to ``tol``) whose null zero-detection rate is at least ``level``."""
    if not 0 < level < 1:
        raise PreconditionError("level must lie in (0, 1)")
    lo, hi = 0.0, float(np.max(ratios)) + 1.0
    for _ in range(max_iter):
        if hi - lo < tol:
            return hi
        mid = 0.5 * (lo + hi)
        if np.mean(ratios < mid) >= level:
            hi = mid
        else:
            lo = mid
    raise CalibrationError(
        f"bisection did not reach tol={tol} in {max_iter} steps (bracket [{lo:.4f}, {hi:.4f}])"
    )


def calibrate_constant(
    T_grid: Iterable[int],
    level: float,
    reps: int = 1000,
    seed: int = 0,
    cfg: Wbs2Config = Wbs2Config(),
    progress: Callable[[int, float], None] | None = None,
) -> ConstantTable:
    """Monte-Carlo calibration of the threshold constant on a grid of sample sizes."""
    return calibrate_tables(T_grid, [level], reps, seed, cfg, progress)[0]


def calibrate_tables(
    T_grid: Iterable[int],
    levels: Iterable[float],
    reps: int = 1000,
    seed: int = 0,
    cfg: Wbs2Config = Wbs2Config(),
    progress: Callable[[int, float], None] | None = None,
) -> list[ConstantTable]:
    """Like :func:`calibrate_constant` but shares the null simulations across levels."""
    grid = sorted(set(int(t) for t in T_grid))
    levels = list(levels)
    if not grid or grid[0] < 2:
        raise PreconditionError("calibration grid needs sample sizes >= 2")
    if reps < 100:
        log.warning("calibrating with reps=%d; constants will be imprecise", reps)
    consts = np.empty((len(levels), len(grid)))
    for j, T in enumerate(grid):
        ratios = null_ratios(T, reps, seed, cfg)
        for i, level in enumerate(levels):
            consts[i, j] = calibrate_from_ratios(ratios, level)
        if progress is not None:
            progress(T, float(consts[0, j]))
    return [ConstantTable(np.array(grid), consts[i], lv) for i, lv in enumerate(levels)]
