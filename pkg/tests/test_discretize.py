import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowae.discretize import QuantileBinner, assign_bin, fit_quantiles, load_binners, save_binners
from flowae.errors import DataError


def oracle_cuts(values, n_bins):
    """Nearest-rank quantiles straight from the definition, no numpy."""
    s = sorted(values)
    n = len(s)
    return [s[math.ceil(k * n / n_bins) - 1] for k in range(1, n_bins)]


def oracle_bin(cut_points, value, n_bins):
    """Linear scan: first cut point at or above the value wins its bin."""
    for k, cut in enumerate(cut_points):
        if value <= cut:
            return k
    return n_bins - 1


def test_fit_deciles_on_1_to_100():
    b = fit_quantiles(range(1, 101), 10)
    assert list(b.cut_points) == [10, 20, 30, 40, 50, 60, 70, 80, 90]


def test_fit_small_sample_rounds_up():
    # ceil(0.5 * 3) = 2nd order statistic
    b = fit_quantiles([3.0, 1.0, 2.0], 2)
    assert b.cut_points == (2.0,)


def test_fit_constant_sample_gives_tied_cuts():
    b = fit_quantiles([5.0] * 4, 4)
    assert b.cut_points == (5.0, 5.0, 5.0)


def test_fit_rejects_empty_and_non_finite():
    with pytest.raises(DataError):
        fit_quantiles([], 4)
    with pytest.raises(DataError):
        fit_quantiles([1.0, float("nan")], 4)
    with pytest.raises(DataError):
        fit_quantiles([1.0, float("inf")], 4)
    with pytest.raises(DataError):
        fit_quantiles([1.0, 2.0], 1)


def test_assign_bin_basics():
    b = QuantileBinner(field="x", n_bins=4, cut_points=(1.0, 2.0, 3.0))
    assert assign_bin(b, 0.5) == 0
    assert assign_bin(b, 1.0) == 0  # boundary stays in the lower bin
    assert assign_bin(b, 1.5) == 1
    assert assign_bin(b, 3.0) == 2
    assert assign_bin(b, 99.0) == 3  # clamped to the top bin


def test_assign_bin_rejects_nan():
    b = QuantileBinner(field="x", n_bins=2, cut_points=(0.0,))
    with pytest.raises(DataError):
        assign_bin(b, float("nan"))


def test_binner_validates_shape_and_order():
    with pytest.raises(DataError):
        QuantileBinner(field="x", n_bins=3, cut_points=(1.0,))
    with pytest.raises(DataError):
        QuantileBinner(field="x", n_bins=3, cut_points=(2.0, 1.0))
    with pytest.raises(DataError):
        QuantileBinner(field="x", n_bins=1, cut_points=())


@settings(deadline=None)
@given(
    st.lists(st.floats(-1e9, 1e9), min_size=1, max_size=80),
    st.integers(2, 12),
)
def test_fit_matches_sort_ceil_oracle(values, n_bins):
    b = fit_quantiles(values, n_bins)
    assert list(b.cut_points) == [float(c) for c in oracle_cuts(values, n_bins)]


@settings(deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40),
    st.integers(2, 10),
    st.floats(-2e6, 2e6),
)
def test_assign_matches_linear_scan_oracle(values, n_bins, probe):
    b = fit_quantiles(values, n_bins)
    assert assign_bin(b, probe) == oracle_bin(b.cut_points, probe, n_bins)


@settings(deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40), st.integers(2, 10))
def test_assign_is_monotone_in_value(values, n_bins):
    b = fit_quantiles(values, n_bins)
    probes = sorted(values)
    bins = [assign_bin(b, v) for v in probes]
    assert all(x <= y for x, y in zip(bins, bins[1:]))
    assert all(0 <= x < n_bins for x in bins)


def test_persistence_round_trip(tmp_path):
    binners = [
        fit_quantiles([1.0, 2.0, 3.0, 4.0], 3, field="duration"),
        fit_quantiles([10, 10, 10, 99], 4, field="src_bytes"),
    ]
    path = tmp_path / "binners.json"
    save_binners(path, binners)
    loaded = load_binners(path)
    assert loaded == binners
