"""Classic WBS (threshold and BIC selection), its solution path, and binary segmentation."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (
    ChangePointModel,
    PreconditionError,
    SolutionPath,
    _cusum_argmax,
    as_series,
    cusum_argmax,
    fit_piecewise_mean,
)
from .estimation import mad
from .sdll import guarded_sigma, threshold


@dataclass(frozen=True)
class WbsConfig:
    m: int = 5000
    threshold_constant: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")


def draw_wbs_intervals(T: int, m: int, seed: int = 0) -> np.ndarray:
    """``m`` intervals with endpoints uniform on ``{1..T}``, coincident pairs redrawn."""
    if T < 2:
        raise PreconditionError("need T >= 2 to draw intervals")
    rng = np.random.default_rng(seed)
    ends = rng.integers(1, T + 1, size=(m, 2))
    bad = ends[:, 0] == ends[:, 1]
    while bad.any():
        ends[bad] = rng.integers(1, T + 1, size=(int(bad.sum()), 2))
        bad = ends[:, 0] == ends[:, 1]
    return np.sort(ends, axis=1)


@njit(cache=True, nogil=True)
def _interval_maxima(prefix, starts, ends):
    m = starts.shape[0]
    b = np.empty(m, np.int64)
    stat = np.empty(m, np.float64)
    for i in range(m):
        b[i], stat[i] = _cusum_argmax(prefix, starts[i], ends[i])
    return b, stat


@njit(cache=True, nogil=True)
def _prune(order, starts, ends, b, T):
    cut = np.zeros(T + 1, np.bool_)
    keep = np.zeros(order.shape[0], np.bool_)
    for j in range(order.shape[0]):
        m = order[j]
        hit = False
        for t in range(starts[m], ends[m]):
            if cut[t]:
                hit = True
                break
        if not hit:
            keep[j] = True
            cut[b[m]] = True
    return keep


def all_intervals(T: int) -> np.ndarray:
    """Every ``[s, e]`` with ``1 <= s < e <= T`` (``T(T-1)/2`` rows)."""
    s, e = np.triu_indices(T, k=1)
    return np.column_stack((s + 1, e + 1))


def _candidates(x, cfg: WbsConfig, intervals=None):
    iv = draw_wbs_intervals(len(x), cfg.m, cfg.seed) if intervals is None else np.asarray(intervals, np.int64)
    if iv.ndim != 2 or iv.shape[1] != 2 or np.any(iv[:, 0] < 1) or np.any(iv[:, 1] > len(x)) or np.any(iv[:, 1] <= iv[:, 0]):
        raise PreconditionError("intervals must be rows [s, e] with 1 <= s < e <= T")
    starts, ends = np.ascontiguousarray(iv[:, 0]), np.ascontiguousarray(iv[:, 1])
    b, stat = _interval_maxima(x._centred_prefix, starts, ends)
    return starts, ends, b, stat


def wbs_solution_path(x, cfg: WbsConfig = WbsConfig(), intervals=None) -> SolutionPath:
    """Non-recursive WBS path: repeatedly take the strongest remaining interval
    maximum and discard every interval straddling its split.

    Generally shorter than ``T - 1`` unless all sub-intervals were drawn.
    ``intervals`` replaces the random draw when given.
    """
    x = as_series(x)
    if len(x) < 2:
        return SolutionPath.empty()
    starts, ends, b, stat = _candidates(x, cfg, intervals)
    order = np.argsort(-stat, kind="stable")
    kept = order[_prune(order, starts, ends, b, len(x))]
    return SolutionPath(starts[kept], ends[kept], b[kept], stat[kept])


def wbs_detect_threshold(
    x,
    cfg: WbsConfig = WbsConfig(),
    sigma_hat: float | None = None,
    zeta: float | None = None,
    fallback_full_domain: bool = True,
    intervals=None,
) -> ChangePointModel:
    """Recursive WBS with a fixed threshold.

    The threshold defaults to ``cfg.threshold_constant * MAD * sqrt(2 log T)``.
    With ``fallback_full_domain`` a domain that holds no drawn interval is
    scanned as a whole instead of being abandoned.
    """
    x = as_series(x)
    T = len(x)
    if T < 2:
        return fit_piecewise_mean(x, [])
    if zeta is None:
        sigma = guarded_sigma(x, mad(x) if sigma_hat is None else sigma_hat)
        zeta = threshold(T, sigma, cfg.threshold_constant)
    starts, ends, b, stat = _candidates(x, cfg, intervals)
    found = []
    stack = [(1, T)]
    while stack:
        s, e = stack.pop()
        if e - s < 1:
            continue
        inside = (starts >= s) & (ends <= e)
        if inside.any():
            m0 = int(np.argmax(np.where(inside, stat, -1.0)))
            split, best = int(b[m0]), float(stat[m0])
        elif fallback_full_domain:
            split, best = cusum_argmax(x, s, e)
        else:
            continue
        if best < zeta:
            continue
        found.append(split)
        stack.append((split + 1, e))
        stack.append((s, split))
    return fit_piecewise_mean(x, sorted(found))


def wbs_bic_select(path: SolutionPath, x) -> ChangePointModel:
    """Prefix of ``path`` minimising ``(T/2) log(RSS_k / T) + k log T``."""
    x = as_series(x)
    T = len(x)
    v = x.values - np.median(x.values)
    s1 = np.concatenate(([0.0], np.cumsum(v)))
    s2 = np.concatenate(([0.0], np.cumsum(v * v)))

    def seg_rss(a, c):  # segment x_{a+1}..x_c
        n = c - a
        tot = s1[c] - s1[a]
        return s2[c] - s2[a] - tot * tot / n

    floor = T * (np.finfo(float).eps * max(1.0, float(np.max(np.abs(v))))) ** 2
    log_T = math.log(T)
    bounds = [0, T]
    rss = seg_rss(0, T)
    best_k, best_bic = 0, 0.5 * T * math.log(max(rss, floor) / T)
    for k, split in enumerate(path.b, 1):
        i = bisect.bisect_left(bounds, split)
        a, c = bounds[i - 1], bounds[i]
        rss += seg_rss(a, split) + seg_rss(split, c) - seg_rss(a, c)
        bounds.insert(i, int(split))
        bic = 0.5 * T * math.log(max(rss, floor) / T) + k * log_T
        if bic < best_bic:
            best_k, best_bic = k, bic
    return fit_piecewise_mean(x, np.sort(path.b[:best_k]))


def binseg_detect(x, threshold_constant: float = 1.0, sigma_hat: float | None = None) -> ChangePointModel:
    """Plain binary segmentation: split each domain at its own CUSUM maximum."""
    x = as_series(x)
    T = len(x)
    if T < 2:
        return fit_piecewise_mean(x, [])
    sigma = guarded_sigma(x, mad(x) if sigma_hat is None else sigma_hat)
    zeta = threshold(T, sigma, threshold_constant)
    found = []
    stack = [(1, T)]
    while stack:
        s, e = stack.pop()
        if e - s < 1:
            continue
        split, best = cusum_argmax(x, s, e)
        if best < zeta:
            continue
        found.append(split)
        stack.append((split + 1, e))
        stack.append((s, split))
    return fit_piecewise_mean(x, sorted(found))
