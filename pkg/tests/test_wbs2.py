import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wildseg.core import ChangePointModel, PreconditionError, fit_piecewise_mean
from wildseg.simlab import gen_extreme_teeth
from wildseg.wbs2 import (
    Wbs2Config,
    draw_intervals,
    median_run_ensemble,
    unsorted_solution_path,
    wbs2_solution_path,
)


def test_exhaustive_draw():
    iv = draw_intervals(1, 3, 100)
    assert sorted(map(tuple, iv.tolist())) == [(1, 2), (1, 3), (2, 3)]
    assert draw_intervals(1, 2, 5).tolist() == [[1, 2]]


def test_exhaustive_draw_counts_all_pairs():
    iv = draw_intervals(4, 17, 10_000)
    n = 17 - 4 + 1
    assert len(iv) == n * (n - 1) // 2 == len(set(map(tuple, iv.tolist())))


@pytest.mark.parametrize("seed", range(5))
def test_random_draw_bounds(seed):
    iv = draw_intervals(1, 1000, 100, seed=seed)
    assert iv.shape == (100, 2)
    assert np.all((1 <= iv[:, 0]) & (iv[:, 0] < iv[:, 1]) & (iv[:, 1] <= 1000))


def test_random_draw_is_seeded():
    assert np.array_equal(draw_intervals(5, 500, 50, seed=3), draw_intervals(5, 500, 50, seed=3))
    assert not np.array_equal(draw_intervals(5, 500, 50, seed=3), draw_intervals(5, 500, 50, seed=4))


def test_random_draw_endpoints_roughly_uniform():
    iv = draw_intervals(1, 10, 44, seed=0)  # 44 < 45 forces the random branch
    big = np.concatenate([draw_intervals(1, 10, 44, seed=s).ravel() for s in range(300)])
    counts = np.bincount(big, minlength=11)[1:]
    assert iv.shape == (44, 2)
    assert counts.min() > 0.8 * counts.mean() and counts.max() < 1.2 * counts.mean()


def test_draw_rejects_short_domain():
    with pytest.raises(PreconditionError):
        draw_intervals(3, 3, 10)


def test_trivial_paths():
    assert len(wbs2_solution_path([1.0])) == 0
    p = wbs2_solution_path([0.0, 1.0])
    assert len(p) == 1
    assert p[0][:3] == (1, 2, 1)
    assert p[0].stat == pytest.approx(1 / np.sqrt(2))


def test_noiseless_teeth_head_is_exact():
    sig = gen_extreme_teeth()
    p = wbs2_solution_path(sig.values, Wbs2Config(seed=11))
    assert np.array_equal(np.sort(p.b[:199]), np.arange(5, 1000, 5))
    assert np.all(p.stat[199:] == 0)


@st.composite
def noisy_series(draw, max_T=300):
    T = draw(st.integers(1, max_T))
    seed = draw(st.integers(0, 2**31 - 1))
    kind = draw(st.sampled_from(["noise", "steps", "constant", "teeth"]))
    rng = np.random.default_rng(seed)
    if kind == "noise":
        x = rng.standard_normal(T)
    elif kind == "steps":
        x = np.repeat(rng.normal(0, 3, T), rng.integers(1, 8, T))[:T] + 0.2 * rng.standard_normal(T)
    elif kind == "constant":
        x = np.full(T, rng.normal())
    else:
        x = (np.arange(1, T + 1) % 10 >= 6).astype(float) + 0.3 * rng.standard_normal(T)
    return x, seed


@given(noisy_series(), st.integers(1, 150), st.booleans())
def test_path_is_complete_and_sorted(case, m_tilde, full):
    x, seed = case
    p = wbs2_solution_path(x, Wbs2Config(m_tilde, seed, full))
    assert len(p) == len(x) - 1
    assert p.is_complete(len(x))
    assert p.is_sorted()
    assert np.all((p.s <= p.b) & (p.b < p.e))
    assert np.all(p.stat >= 0) and np.all(np.isfinite(p.stat))


@given(noisy_series(), st.integers(1, 120))
def test_domains_form_binary_partition(case, m_tilde):
    x, seed = case
    p = unsorted_solution_path(x, Wbs2Config(m_tilde, seed))
    stack = [(1, len(x))]
    k = 0
    while stack:
        s, e = stack.pop()
        if e - s < 1:
            continue
        entry = p[k]
        assert s <= entry.s and entry.e <= e and entry.s <= entry.b < entry.e
        k += 1
        stack.append((entry.b + 1, e))
        stack.append((s, entry.b))
    assert k == len(p)


@given(noisy_series())
def test_seed_determinism(case):
    x, seed = case
    cfg = Wbs2Config(seed=seed)
    assert wbs2_solution_path(x, cfg).identical(wbs2_solution_path(x, cfg))


def test_seeds_change_the_path():
    x = np.random.default_rng(0).standard_normal(500)
    a = wbs2_solution_path(x, Wbs2Config(seed=1))
    b = wbs2_solution_path(x, Wbs2Config(seed=2))
    assert not a.identical(b)


def test_ties_are_shuffled_by_seed():
    x = np.zeros(200)
    orders = {tuple(wbs2_solution_path(x, Wbs2Config(seed=s)).b[:5]) for s in range(5)}
    assert len(orders) > 1


def test_without_full_domain_still_complete():
    x = np.random.default_rng(5).standard_normal(2000)
    assert wbs2_solution_path(x, Wbs2Config(20, 3, False)).is_complete(2000)


def test_config_validation():
    with pytest.raises(ValueError):
        Wbs2Config(m_tilde=0)


def _fake_selector(counts):
    def select(x, cfg):
        n = counts[cfg.seed]
        return fit_piecewise_mean(x, np.arange(1, n + 1))

    return select


def test_median_run_single_run_is_identity():
    x = np.random.default_rng(0).standard_normal(50)
    sel = _fake_selector({7: 3})
    model, pooled = median_run_ensemble(x, Wbs2Config(seed=7), sel, runs=1)
    assert model.n_hat == 3 and pooled.tolist() == [1, 2, 3]


def test_median_run_picks_median_count():
    x = np.zeros(20)
    counts = {0: 5, 1: 1, 2: 3, 3: 9, 4: 2}
    model, pooled = median_run_ensemble(x, Wbs2Config(seed=0), _fake_selector(counts), runs=5)
    assert model.n_hat == 3
    assert len(pooled) == sum(counts.values())


def test_median_run_even_uses_lower_median():
    counts = {0: 4, 1: 1, 2: 3, 3: 8}
    model, _ = median_run_ensemble(np.zeros(20), Wbs2Config(seed=0), _fake_selector(counts), runs=4)
    assert model.n_hat == 3


def test_median_run_rejects_zero_runs():
    with pytest.raises(PreconditionError):
        median_run_ensemble([0.0, 1.0], Wbs2Config(), _fake_selector({}), runs=0)
