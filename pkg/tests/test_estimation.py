import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wildseg.core import PreconditionError
from wildseg.estimation import (
    MAD_CONSTANT,
    CalibrationError,
    ConstantTable,
    calibrate_constant,
    calibrate_from_ratios,
    calibrate_tables,
    default_table,
    interpolate_constant,
    iqr_estimator,
    mad,
    null_ratios,
)
from wildseg.simlab import NoiseSpec, gen_extreme_teeth, simulate


def test_mad_constant():
    assert MAD_CONSTANT == pytest.approx(1.4826, abs=1e-4)


@pytest.mark.parametrize("est", [mad, iqr_estimator])
def test_constant_series_has_zero_scale(est):
    assert est(np.full(50, 3.3)) == 0.0


@pytest.mark.parametrize("est", [mad, iqr_estimator])
def test_too_short(est):
    with pytest.raises(PreconditionError):
        est([1.0])


def test_mad_by_hand():
    # differences (1, 1, 3)/sqrt2: median 1/sqrt2, deviations (0, 0, 2/sqrt2)
    assert mad([0.0, 1.0, 2.0, 5.0]) == 0.0
    # differences (1, 2, 4, 8)/sqrt2: median 3/sqrt2, |dev| (2, 1, 1, 5)/sqrt2 -> median 1.5/sqrt2
    assert mad([0.0, 1.0, 3.0, 7.0, 15.0]) == pytest.approx(MAD_CONSTANT * 1.5 / math.sqrt(2))


def test_mad_consistent_on_gaussian_noise(rng):
    est = [mad(rng.normal(0, 0.3, 1000)) for _ in range(100)]
    assert abs(np.mean(est) - 0.3) < 0.02


def test_iqr_consistent_on_gaussian_noise(rng):
    assert iqr_estimator(rng.standard_normal(10_000)) == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("est", [mad, iqr_estimator])
def test_upward_bias_on_frequent_changes(est):
    sig = gen_extreme_teeth()
    vals = [est(simulate(sig, NoiseSpec(sigma=0.3), seed=5, rep=r)) for r in range(100)]
    assert 0.35 <= np.mean(vals) <= 0.42


@given(
    arrays(np.float64, st.integers(2, 60), elements=st.floats(-100, 100)),
    st.floats(-20, 20),
    st.floats(-100, 100),
)
def test_mad_equivariance(x, a, c):
    assert mad(a * x + c) == pytest.approx(abs(a) * mad(x), rel=1e-7, abs=1e-9 * max(1, abs(c), np.abs(x).max()))


def test_interpolation_examples():
    t90 = ConstantTable(np.array([10, 10000]), np.array([1.42, 1.135]), 0.90)
    assert interpolate_constant(t90, 10) == pytest.approx(1.42)
    assert interpolate_constant(t90, 3) == pytest.approx(1.42)
    assert interpolate_constant(t90, 10**6) == pytest.approx(1.135)
    two = ConstantTable(np.array([10, 1000]), np.array([2.0, 1.0]), 0.9)
    assert interpolate_constant(two, 100) == pytest.approx(1.5)


@given(st.integers(1, 10**7))
def test_interpolation_continuity(T):
    table = default_table(0.90)
    lo, hi = table.c.min(), table.c.max()
    c = table(T)
    assert lo <= c <= hi
    assert abs(table(T + 1) - c) < 0.05


def test_table_validation():
    with pytest.raises(ValueError):
        ConstantTable(np.array([10, 10]), np.array([1.0, 1.0]), 0.9)
    with pytest.raises(ValueError):
        ConstantTable(np.array([10]), np.array([-1.0]), 0.9)
    with pytest.raises(ValueError):
        ConstantTable(np.array([10]), np.array([1.0]), 1.5)
    with pytest.raises(ValueError):
        ConstantTable(np.array([], dtype=int), np.array([]), 0.9)


def test_table_text_round_trip(tmp_path):
    table = ConstantTable(np.array([10, 100, 1000]), np.array([1.5, 1.3, 1.2]), 0.95)
    text = table.to_text()
    assert text == "# level=0.95\n10 1.5000\n100 1.3000\n1000 1.2000\n"
    path = tmp_path / "t.txt"
    table.save(path)
    back = ConstantTable.load(path)
    assert back.level == 0.95 and back.T.tolist() == [10, 100, 1000] and back.c.tolist() == [1.5, 1.3, 1.2]


@pytest.mark.parametrize(
    "text, msg",
    [
        ("10 1.2\n", "missing"),
        ("# level=0.9\n10 1.2 3\n", ":2:"),
        ("# level=0.9\nten 1.2\n", ":2:"),
        ("# level=abc\n10 1.2\n", ":1:"),
        ("# level=0.9\n", "no anchor"),
    ],
)
def test_table_parse_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        ConstantTable.from_text(text)


def test_shipped_tables():
    t90, t95 = default_table(0.90), default_table(0.95)
    assert t90.level == 0.90 and t95.level == 0.95
    assert np.all(np.diff(t90.c) < 0)
    assert np.all(t95.c > t90.c)
    with pytest.raises(ValueError):
        default_table(0.5)


def test_bisection_hits_the_quantile():
    ratios = np.linspace(0, 1, 1001)[1:]
    c = calibrate_from_ratios(ratios, 0.9)
    assert np.mean(ratios < c) >= 0.9
    assert c - 0.9 < 0.006


def test_bisection_failure_is_reported():
    with pytest.raises(CalibrationError):
        calibrate_from_ratios(np.array([1.0, 2.0]), 0.9, max_iter=2)


def test_calibration_small_run():
    t90, t95 = calibrate_tables([10, 1000], [0.90, 0.95], reps=150, seed=4)
    assert t90.c[0] > t90.c[1]  # constants shrink with T
    assert np.all(t95.c >= t90.c)  # and grow with the level
    again = calibrate_constant([10, 1000], 0.90, reps=150, seed=4)
    assert np.array_equal(again.c, t90.c) and again.T.tolist() == [10, 1000]


def test_calibration_warns_on_few_reps(caplog):
    with caplog.at_level(logging.WARNING):
        calibrate_constant([20], 0.9, reps=10, seed=0)
    assert "imprecise" in caplog.text


def test_null_ratios_are_reproducible():
    assert np.array_equal(null_ratios(50, 20, seed=3), null_ratios(50, 20, seed=3))
