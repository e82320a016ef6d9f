"""WBS2 solution path: adaptive recursive interval draws and the global sort."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .core import ChangePointModel, PreconditionError, SolutionPath, TimeSeries, _cusum_argmax, as_series


@dataclass(frozen=True)
class Wbs2Config:
    """Parameters of the WBS2 solution path.

    ``include_full_domain`` adds the current domain itself to every random batch
    of intervals; switch it off for the bare random-draw procedure.
    """

    m_tilde: int = 100
    seed: int = 0
    include_full_domain: bool = True

    def __post_init__(self):
        if self.m_tilde < 1:
            raise ValueError("m_tilde must be >= 1")

    def with_seed(self, seed: int) -> "Wbs2Config":
        return Wbs2Config(self.m_tilde, seed, self.include_full_domain)


def _streams(seed: int) -> tuple[int, np.random.Generator]:
    """Split a user seed into a kernel seed and a tie-breaking generator."""
    kernel, ties = np.random.SeedSequence(seed).spawn(2)
    return int(kernel.generate_state(1)[0]), np.random.default_rng(ties)


@njit(cache=True, nogil=True)
def _seed_kernel(seed):
    np.random.seed(seed)


@njit(cache=True, nogil=True)
def _draw(s, e, m_tilde, out_s, out_e):
    n = e - s + 1
    total = n * (n - 1) // 2
    if m_tilde >= total:
        k = 0
        for a in range(s, e):
            for c in range(a + 1, e + 1):
                out_s[k] = a
                out_e[k] = c
                k += 1
        return k, True
    for m in range(m_tilde):
        while True:
            a = np.random.randint(s, e + 1)
            c = np.random.randint(s, e + 1)
            if a != c:
                break
        out_s[m] = min(a, c)
        out_e[m] = max(a, c)
    return m_tilde, False


@njit(cache=True, nogil=True)
def _path_kernel(prefix, m_tilde, include_full, seed):
    np.random.seed(seed)
    T = prefix.shape[0] - 1
    n_out = max(T - 1, 0)
    ps = np.empty(n_out, np.int64)
    pe = np.empty(n_out, np.int64)
    pb = np.empty(n_out, np.int64)
    pstat = np.empty(n_out, np.float64)
    stack_s = np.empty(T + 1, np.int64)
    stack_e = np.empty(T + 1, np.int64)
    buf_s = np.empty(m_tilde + 1, np.int64)
    buf_e = np.empty(m_tilde + 1, np.int64)
    top = 0
    stack_s[0] = 1
    stack_e[0] = T
    top = 1
    k = 0
    while top > 0:
        top -= 1
        s = stack_s[top]
        e = stack_e[top]
        if e - s < 1:
            continue
        cnt, exhaustive = _draw(s, e, m_tilde, buf_s, buf_e)
        if include_full and not exhaustive:
            buf_s[cnt] = s
            buf_e[cnt] = e
            cnt += 1
        best = -1.0
        best_m = 0
        best_b = s
        for m in range(cnt):
            b, v = _cusum_argmax(prefix, buf_s[m], buf_e[m])
            if v > best:
                best = v
                best_m = m
                best_b = b
        ps[k] = buf_s[best_m]
        pe[k] = buf_e[best_m]
        pb[k] = best_b
        pstat[k] = best
        k += 1
        # right pushed first so the left child is explored first
        stack_s[top] = best_b + 1
        stack_e[top] = e
        top += 1
        stack_s[top] = s
        stack_e[top] = best_b
        top += 1
    return ps, pe, pb, pstat


def draw_intervals(s: int, e: int, m_tilde: int, seed: int = 0) -> np.ndarray:
    """Intervals ``[s_m, e_m]`` (rows) inside ``[s, e]`` with ``e_m > s_m``.

    All such intervals when there are at most ``m_tilde`` of them, otherwise
    ``m_tilde`` random draws with endpoints uniform on ``{s..e}`` (with
    replacement, coincident pairs redrawn).
    """
    if e - s < 1:
        raise PreconditionError(f"domain [{s}, {e}] shorter than 2")
    if m_tilde < 1:
        raise PreconditionError("m_tilde must be >= 1")
    n = e - s + 1
    size = min(m_tilde, n * (n - 1) // 2)
    out_s = np.empty(size, np.int64)
    out_e = np.empty(size, np.int64)
    _seed_kernel(_streams(seed)[0])
    cnt, _ = _draw(s, e, m_tilde, out_s, out_e)
    return np.column_stack((out_s[:cnt], out_e[:cnt]))


def unsorted_solution_path(x, cfg: Wbs2Config = Wbs2Config()) -> SolutionPath:
    """Candidates in discovery order (pre-order of the recursion)."""
    x = as_series(x)
    kernel_seed, _ = _streams(cfg.seed)
    s, e, b, stat = _path_kernel(x._centred_prefix, cfg.m_tilde, cfg.include_full_domain, kernel_seed)
    return SolutionPath(s, e, b, stat)


def wbs2_solution_path(x, cfg: Wbs2Config = Wbs2Config()) -> SolutionPath:
    """Complete WBS2 solution path, sorted by non-increasing CUSUM magnitude.

    Ties in the magnitude are ordered by a seeded random permutation. For a
    series of length ``T`` the path has exactly ``T - 1`` entries and every
    ``1 <= b <= T - 1`` appears once.
    """
    x = as_series(x)
    if len(x) < 2:
        return SolutionPath.empty()
    kernel_seed, ties = _streams(cfg.seed)
    s, e, b, stat = _path_kernel(x._centred_prefix, cfg.m_tilde, cfg.include_full_domain, kernel_seed)
    order = np.lexsort((ties.random(stat.shape[0]), -stat))
    return SolutionPath(s[order], e[order], b[order], stat[order])


Selector = Callable[[TimeSeries, Wbs2Config], ChangePointModel]


def median_run_ensemble(
    x, cfg: Wbs2Config, selector: Selector, runs: int = 9
) -> tuple[ChangePointModel, np.ndarray]:
    """Run ``selector`` with seeds ``cfg.seed, cfg.seed + 1, ...`` and keep the median run.

    ``selector(x, cfg)`` must return a fitted model. The run whose change-point
    count is the (lower) median is returned with all locations pooled over runs.
    """
    if runs < 1:
        raise PreconditionError("runs must be >= 1")
    x = as_series(x)
    models = [selector(x, cfg.with_seed(cfg.seed + r)) for r in range(runs)]
    counts = np.array([m.n_hat for m in models])
    chosen = np.argsort(counts, kind="stable")[(runs - 1) // 2]
    pooled = np.sort(np.concatenate([m.locations for m in models]))
    return models[chosen], pooled
