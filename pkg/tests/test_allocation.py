import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agrifoot.allocation import (
    AllocationEntry, AllocationProfile, CoverageGapError, allocation_table, coverage_gaps,
    mass_function, raw_matrix, raw_weight,
)


def test_entry_validation():
    with pytest.raises(ValueError):
        AllocationEntry("A", 10, 10, 0.5)
    with pytest.raises(ValueError):
        AllocationEntry("A", 0, 10, 1.5)
    with pytest.raises(ValueError):
        AllocationEntry("A", 0, 10, 0.5, shape="gaussian")


def test_quartic_peak_and_ends():
    e = AllocationEntry("A", 20, 60, 0.8)
    assert raw_weight(e, 20) == 0.0
    assert raw_weight(e, 60) == 0.0
    assert raw_weight(e, 40) == 0.8
    assert raw_weight(e, 19.999) == 0.0
    assert raw_weight(e, 30) == pytest.approx(0.8 * 0.5625)


def test_full_deployment_covers_everything():
    p = AllocationProfile.full_deployment("TS_A")
    t = allocation_table(p, [0.5, 1, 1e6])
    np.testing.assert_array_equal(t.shares, 1.0)


def test_overlap_shares():
    p = AllocationProfile.from_records([
        {"ts": "A", "a": 0, "b": 100, "w": 1.0},
        {"ts": "B", "a": 0, "b": 100, "w": 0.25},
    ])
    shares = dict(mass_function(p, 50))
    assert shares == {"A": 0.8, "B": 0.2}


def test_repeated_ts_entries_add_up():
    p = AllocationProfile.from_records([
        {"ts": "A", "a": 0, "b": 40, "w": 1.0},
        {"ts": "A", "a": 30, "b": 100, "w": 1.0},
        {"ts": "B", "a": 0, "b": 100, "w": 0.5},
    ])
    assert p.ts_names == ["A", "B"]
    t = allocation_table(p, [35.0])
    a = raw_weight(p.entries[0], 35) + raw_weight(p.entries[1], 35)
    b = raw_weight(p.entries[2], 35)
    assert t.column("A")[0] == pytest.approx(a / (a + b))


def test_gap_names_sizes_and_supports():
    p = AllocationProfile.from_records([
        {"ts": "A", "a": 0, "b": 70, "w": 1.0},
        {"ts": "B", "a": 80, "b": 200, "w": 1.0},
    ])
    with pytest.raises(CoverageGapError) as info:
        allocation_table(p, [50, 75, 100])
    assert info.value.sizes == (75.0,)
    msg = str(info.value)
    assert "75" in msg and "A [0, 70]" in msg and "B [80, 200]" in msg
    assert coverage_gaps(p, [50, 75, 100]) == [75.0]


def test_support_endpoint_alone_is_a_gap():
    # quartic weight vanishes at the ends of its support
    p = AllocationProfile.from_records([{"ts": "A", "a": 0, "b": 70, "w": 1.0}])
    assert coverage_gaps(p, [70.0]) == [70.0]


def test_write_table(tmp_path):
    p = AllocationProfile.from_records([{"ts": "A", "a": 0, "b": 100, "w": 1}])
    allocation_table(p, [10, 50]).write(tmp_path / "t.csv", size_label="size_heads")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "size_heads,A_share"


entries = st.builds(
    lambda ts, a, width, w: {"ts": ts, "a": a, "b": a + width, "w": w},
    st.sampled_from(["A", "B", "C", "D"]),
    st.floats(0, 500),
    st.floats(1, 500),
    st.floats(0.01, 1.0),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(entries, min_size=1, max_size=6), st.lists(st.floats(0, 1100), min_size=1, max_size=30))
def test_vector_and_scalar_shares_agree(records, sizes):
    p = AllocationProfile.from_records(records)
    raw = raw_matrix(p, sizes)
    for i, s in enumerate(sizes):
        total = raw[i].sum()
        if total > 0:
            got = raw[i] / total
            want = [t for _, t in mass_function(p, s)]
            np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)
            assert math.isclose(got.sum(), 1.0, abs_tol=1e-12)
        else:
            with pytest.raises(CoverageGapError):
                mass_function(p, s)


@settings(max_examples=200, deadline=None)
@given(entries, st.floats(-10, 1100))
def test_raw_weight_bounded_by_w(rec, s):
    e = AllocationEntry(rec["ts"], rec["a"], rec["b"], rec["w"])
    r = raw_weight(e, s)
    assert 0.0 <= r <= e.w
    if not e.a <= s <= e.b:
        assert r == 0.0
