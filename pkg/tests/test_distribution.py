import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agrifoot.distribution import (
    CoarseBinSpec, DistributionError, FarmSizeDistribution, ReconstructionError, SizeUnit,
    average_size, bin_membership, densify, fit_density, read_distribution_csv, total_farms,
    total_size,
)
from builders import FIXTURES

CEREAL = CoarseBinSpec((20, 50, 100, 200, 400), (19500, 18000, 16000, 11723), 65223, 7358412)


def test_totals_and_average():
    d = FarmSizeDistribution((10, 20, 40), (3, 1, 1), SizeUnit.HEADS)
    assert total_farms(d) == 5
    assert total_size(d) == 90
    assert average_size(d) == 18


@pytest.mark.parametrize(
    "sizes,counts",
    [((10, 10), (1, 1)), ((20, 10), (1, 1)), ((0, 10), (1, 1)), ((10,), (-1,)), ((10, 20), (1,))],
)
def test_invalid_distributions_rejected(sizes, counts):
    with pytest.raises(DistributionError):
        FarmSizeDistribution(sizes, counts)


def test_average_of_empty_distribution():
    with pytest.raises(DistributionError):
        average_size(FarmSizeDistribution((10,), (0,)))


def test_filtered_excludes_out_of_range_sizes():
    d = FarmSizeDistribution((5, 20, 50, 500), (1, 2, 3, 4)).filtered(20, 400)
    assert d.sizes == (20.0, 50.0)
    assert d.counts == (2.0, 3.0)


@pytest.mark.parametrize("delim", [",", "\t", ";"])
def test_read_csv_delimiters(tmp_path, delim):
    p = tmp_path / "d.csv"
    p.write_text(f"size{delim}count\n30{delim}2\n10{delim}1\n")
    d = read_distribution_csv(p, "heads")
    assert d.sizes == (10.0, 30.0) and d.counts == (1.0, 2.0)
    assert d.size_unit is SizeUnit.HEADS


def test_shipped_cattle_distribution():
    d = read_distribution_csv(FIXTURES / "cattle_distribution.csv", "heads")
    assert total_farms(d) == 51_000
    assert total_size(d) == 3_458_000


def test_coarse_spec_checks_sum():
    with pytest.raises(DistributionError):
        CoarseBinSpec((0, 10, 20), (5, 5), 20, 100)


def test_bin_membership_splits_interior_edges():
    W = bin_membership([10, 15, 20, 25, 30], [10, 20, 30])
    np.testing.assert_array_equal(W, [[1, 1, 0.5, 0, 0], [0, 0, 0.5, 1, 1]])
    # every size is counted exactly once in total
    np.testing.assert_array_equal(W.sum(axis=0), 1.0)


def test_cereal_reconstruction_matches_bins():
    d = densify(CEREAL)
    assert len(d) == 381
    assert total_farms(d) == pytest.approx(65223, rel=1e-3)
    assert total_size(d) == pytest.approx(7358412, rel=5e-3)
    per_bin = bin_membership(d.sizes, CEREAL.bin_edges) @ d.counts_array
    np.testing.assert_allclose(per_bin, CEREAL.bin_counts, rtol=1e-3)
    assert min(d.counts) >= 0


def test_cereal_density_is_decreasing():
    density, _ = fit_density(CEREAL, 1.0)
    assert np.all(np.diff(density.heights) < 0)


def test_single_bin_recovers_exact_total():
    d = densify(CoarseBinSpec((20, 40), (100,), 100, 3000))
    assert len(d) == 21
    assert total_farms(d) == pytest.approx(100, rel=1e-6)
    assert total_size(d) == pytest.approx(3000, rel=1e-6)


def test_equal_bins_with_consistent_total_give_uniform_counts():
    d = densify(CoarseBinSpec((10, 20, 30), (100, 100), 200, 4000))
    np.testing.assert_allclose(d.counts, 200 / 21, rtol=1e-6)


def test_infeasible_total_raises():
    # 100 farms in [20, 40] cannot occupy 5000 ha
    with pytest.raises(ReconstructionError):
        densify(CoarseBinSpec((20, 40), (100,), 100, 5000))


def test_step_must_be_positive():
    with pytest.raises(DistributionError):
        densify(CEREAL, step=0)


@settings(max_examples=25, deadline=None)
@given(
    counts=st.lists(st.integers(50, 5000), min_size=2, max_size=4),
    frac=st.floats(0.3, 0.7),
)
def test_reconstruction_is_nonnegative_and_continuous(counts, frac):
    edges = tuple(float(10 * 2**k) for k in range(len(counts) + 1))
    # target size somewhere inside each bin, weighted by frac
    size = sum(c * (a + frac * (b - a)) for c, a, b in zip(counts, edges, edges[1:]))
    spec = CoarseBinSpec(edges, tuple(counts), sum(counts), size)
    density, _ = fit_density(spec, 1.0)
    assert np.all(density.heights >= 0)
    # C0: values just left and right of each knot agree up to slope * eps
    eps = 1e-7
    k = density.knots[1:-1]
    left, right = density(k - eps), density(k + eps)
    assert np.all(np.abs(left - right) <= 2 * eps * density.max_slope + 1e-9)
