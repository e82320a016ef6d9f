"""Time series container, CUSUM evaluation and piecewise-mean fitting.

All user-facing indices are 1-based: a series has entries ``x_1..x_T`` and a
split ``b`` separates ``x_s..x_b`` from ``x_{b+1}..x_e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from numba import njit


class PreconditionError(ValueError):
    """Raised when an operation is called outside its documented domain."""


def derive_seed(*keys: int) -> int:
    """Deterministic 32-bit seed from a tuple of nonnegative integers."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


@njit(cache=True, nogil=True)
def _compensated_cumsum(x):
    out = np.zeros(x.shape[0] + 1)
    acc = 0.0
    comp = 0.0
    for i in range(x.shape[0]):
        y = x[i] - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        out[i + 1] = acc
    return out


@njit(cache=True, nogil=True)
def _cusum(prefix, s, e, b):
    # Mean-difference form of the CUSUM contrast; exactly zero on constant data.
    n_left = b - s + 1
    n_right = e - b
    n = e - s + 1
    left = (prefix[b] - prefix[s - 1]) / n_left
    right = (prefix[e] - prefix[b]) / n_right
    return np.sqrt(n_left * n_right / n) * (left - right)


@njit(cache=True, nogil=True)
def _cusum_argmax(prefix, s, e):
    best_b = s
    best = -1.0
    for b in range(s, e):
        v = abs(_cusum(prefix, s, e, b))
        if v > best:
            best = v
            best_b = b
    return best_b, best


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Observed sequence with compensated prefix sums.

    ``prefix[t]`` is the sum of the first ``t`` values. CUSUMs are evaluated on
    a median-centred copy so that constant stretches give exactly zero.
    """

    values: np.ndarray
    prefix: np.ndarray = field(repr=False)
    _centred_prefix: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, values: Sequence[float] | np.ndarray) -> "TimeSeries":
        x = np.array(values, dtype=np.float64).ravel()
        if x.size < 1:
            raise PreconditionError("a time series needs at least one value")
        if not np.all(np.isfinite(x)):
            raise ValueError("time series values must be finite")
        x.setflags(write=False)
        prefix = _compensated_cumsum(x)
        centred = _compensated_cumsum(x - np.median(x))
        prefix.setflags(write=False)
        centred.setflags(write=False)
        return cls(x, prefix, centred)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[0]


def as_series(x) -> TimeSeries:
    return x if isinstance(x, TimeSeries) else TimeSeries.from_values(x)


class PathEntry(NamedTuple):
    s: int
    e: int
    b: int
    stat: float


@dataclass(frozen=True, eq=False)
class SolutionPath:
    """Candidate change-points as parallel arrays, ordered by importance."""

    s: np.ndarray
    e: np.ndarray
    b: np.ndarray
    stat: np.ndarray

    @classmethod
    def empty(cls) -> "SolutionPath":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), np.zeros(0))

    def __len__(self) -> int:
        return self.b.shape[0]

    def __iter__(self) -> Iterator[PathEntry]:
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, k: int) -> PathEntry:
        return PathEntry(int(self.s[k]), int(self.e[k]), int(self.b[k]), float(self.stat[k]))

    @property
    def entries(self) -> list[PathEntry]:
        return list(self)

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.stat) <= 0))

    def is_complete(self, T: int) -> bool:
        return len(self) == max(T - 1, 0) and np.array_equal(
            np.sort(self.b), np.arange(1, T, dtype=np.int64)
        )

    def identical(self, other: "SolutionPath") -> bool:
        return all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in ("s", "e", "b", "stat")
        )


@dataclass(frozen=True, eq=False)
class ChangePointModel:
    """Estimated change-points (1-based, last index of each left segment) and fit."""

    locations: np.ndarray
    fit: np.ndarray

    @property
    def n_hat(self) -> int:
        return int(self.locations.shape[0])

    def segment_means(self) -> np.ndarray:
        starts = np.concatenate(([0], self.locations))
        return self.fit[starts]


def _check_index(x: TimeSeries, s: int, e: int) -> None:
    if not (1 <= s < e <= len(x)):
        raise PreconditionError(f"need 1 <= s < e <= T={len(x)}, got s={s}, e={e}")


def cusum_at(x, s: int, e: int, b: int) -> float:
    """Signed CUSUM contrast of ``x_s..x_b`` against ``x_{b+1}..x_e``."""
    x = as_series(x)
    _check_index(x, s, e)
    if not s <= b < e:
        raise PreconditionError(f"split b={b} outside [{s}, {e - 1}]")
    return float(_cusum(x._centred_prefix, s, e, b))


def cusum_argmax(x, s: int, e: int) -> tuple[int, float]:
    """Split maximising ``|cusum_at|`` on ``[s, e]``; ties go to the smallest ``b``."""
    x = as_series(x)
    _check_index(x, s, e)
    b, stat = _cusum_argmax(x._centred_prefix, s, e)
    return int(b), float(stat)


def _check_locations(locations, T: int) -> np.ndarray:
    loc = np.asarray(locations, dtype=np.int64).ravel()
    if loc.size and (np.any(np.diff(loc) <= 0) or loc[0] < 1 or loc[-1] > T - 1):
        raise PreconditionError("locations must be strictly increasing within 1..T-1")
    return loc


def fit_piecewise_mean(x, locations) -> ChangePointModel:
    """Piecewise-constant fit taking the sample mean between consecutive change-points."""
    x = as_series(x)
    loc = _check_locations(locations, len(x))
    starts = np.concatenate(([0], loc))
    lengths = np.diff(np.concatenate((starts, [len(x)])))
    means = np.add.reduceat(x.values, starts) / lengths
    return ChangePointModel(loc, np.repeat(means, lengths))


def residual_sum_of_squares(x, model: ChangePointModel) -> float:
    x = as_series(x)
    r = x.values - model.fit
    return float(r @ r)
