"""Steepest-Drop-to-Low-Levels model selection on a sorted solution path."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChangePointModel, PreconditionError, SolutionPath, as_series, fit_piecewise_mean
from .estimation import default_table, mad
from .wbs2 import Wbs2Config, median_run_ensemble, wbs2_solution_path

EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class SdllConfig:
    """Threshold ``constant * sigma_hat * sqrt(2 log T)`` plus the low-level gate ``beta``.

    With ``threshold_constant=None`` the constant is read from the shipped
    table for ``level``; with ``sigma_hat=None`` the MAD estimate is used.
    """

    threshold_constant: float | None = None
    level: float = 0.90
    beta: float = 0.3
    sigma_hat: float | None = None

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.threshold_constant is not None and self.threshold_constant <= 0:
            raise ValueError("threshold_constant must be positive")
        if self.sigma_hat is not None and self.sigma_hat < 0:
            raise ValueError("sigma_hat must be nonnegative")

    def constant(self, T: int) -> float:
        if self.threshold_constant is not None:
            return self.threshold_constant
        return default_table(self.level)(T)


def threshold(T: int, sigma_hat: float, constant: float) -> float:
    return constant * sigma_hat * math.sqrt(2.0 * math.log(T))


def guarded_sigma(x, sigma_hat: float) -> float:
    """Replace a degenerate (numerically zero) noise scale by one ulp of the data scale."""
    x = as_series(x)
    top = float(np.max(np.abs(x.values)))
    if sigma_hat < EPS * top or sigma_hat == 0.0:
        return EPS * max(1.0, top)
    return sigma_hat


def sdll_n_hat(stats: np.ndarray, zeta: float, beta: float) -> int:
    """Number of change-points chosen from sorted magnitudes ``stats``.

    The largest log-drop ``log stat_k - log stat_{k+1}`` is taken among the
    ``k`` whose next magnitude is both at least ``beta * zeta`` and at most
    ``zeta``; ties go to the smallest ``k``.
    """
    stats = np.asarray(stats, dtype=np.float64)
    if zeta <= 0:
        raise PreconditionError("threshold must be positive")
    if np.any(np.diff(stats) > 0):
        raise PreconditionError("path magnitudes must be non-increasing")
    if stats.size == 0 or stats[0] < zeta:
        return 0
    nxt = stats[1:]
    K = int(np.count_nonzero(nxt >= beta * zeta))
    if K == 0:
        return 1
    upper, lower = stats[:K], nxt[:K]
    assert lower[-1] > 0
    drops = np.log(upper) - np.log(lower)
    feasible = lower <= zeta
    if not feasible.any():
        return K + 1
    return int(np.argmax(np.where(feasible, drops, -np.inf))) + 1


def sdll_select(path: SolutionPath, T: int, cfg: SdllConfig) -> np.ndarray:
    """Sorted change-point locations picked from the head of ``path``."""
    if cfg.sigma_hat is None:
        raise PreconditionError("sdll_select needs cfg.sigma_hat; use detect() to estimate it")
    if len(path) == 0:
        return np.zeros(0, dtype=np.int64)
    zeta = threshold(T, cfg.sigma_hat, cfg.constant(T))
    n_hat = sdll_n_hat(path.stat, zeta, cfg.beta)
    return np.sort(path.b[:n_hat])


def detect(x, wbs2cfg: Wbs2Config = Wbs2Config(), sdllcfg: SdllConfig = SdllConfig()) -> ChangePointModel:
    """WBS2 path, SDLL selection and piecewise-mean fit in one call."""
    x = as_series(x)
    if len(x) < 2:
        return fit_piecewise_mean(x, [])
    sigma = mad(x) if sdllcfg.sigma_hat is None else sdllcfg.sigma_hat
    cfg = SdllConfig(sdllcfg.constant(len(x)), sdllcfg.level, sdllcfg.beta, guarded_sigma(x, sigma))
    path = wbs2_solution_path(x, wbs2cfg)
    return fit_piecewise_mean(x, sdll_select(path, len(x), cfg))


def detect_ensemble(
    x, wbs2cfg: Wbs2Config = Wbs2Config(), sdllcfg: SdllConfig = SdllConfig(), runs: int = 9
) -> tuple[ChangePointModel, np.ndarray]:
    """Median run of ``runs`` seeded :func:`detect` calls, plus pooled locations."""
    return median_run_ensemble(x, wbs2cfg, lambda xs, c: detect(xs, c, sdllcfg), runs)
