import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evshift.errors import EmptyStreamError, InvalidWindowError
from evshift.events import (
    Event,
    EventStream,
    normalize_timestamps,
    slice_window,
    stream_stats,
    validate_stream,
)


def mk(ts, xs=None, ys=None, ps=None, w=4, h=4):
    n = len(ts)
    return EventStream(
        w, h,
        xs if xs is not None else [0] * n,
        ys if ys is not None else [0] * n,
        np.array(ts, dtype=np.uint64),
        ps if ps is not None else [1] * n,
    )


class TestValidate:
    def test_unsorted(self):
        assert validate_stream(mk([3, 1])).issues == ["unsorted at index 1"]

    def test_empty(self):
        r = validate_stream(EventStream(4, 4))
        assert r.ok and not r

    def test_x_out_of_bounds(self):
        r = validate_stream(mk([0, 1, 2], xs=[0, 4, 4]))
        assert r.issues == ["x out of bounds at index 1"]

    def test_reports_every_invariant(self):
        r = validate_stream(mk([5, 1], xs=[9, 0], ys=[0, 7], ps=[1, 0]))
        assert r.issues == [
            "unsorted at index 1",
            "x out of bounds at index 0",
            "y out of bounds at index 1",
            "invalid polarity at index 1",
        ]

    def test_valid(self):
        assert validate_stream(mk([0, 0, 5], ps=[1, -1, 1])).ok


class TestNormalize:
    def test_endpoints_and_midpoint(self):
        assert normalize_timestamps(mk([0, 50, 100]), 3).tolist() == [0, 1, 2]

    def test_single_event(self):
        assert normalize_timestamps(mk([7]), 5).tolist() == [0]

    def test_hand_computed(self):
        # (t - 10) * 3 / 30
        assert normalize_timestamps(mk([10, 20, 40]), 4).tolist() == [0, 1, 3]

    def test_empty_raises(self):
        with pytest.raises(EmptyStreamError):
            normalize_timestamps(EventStream(4, 4), 3)

    @settings(max_examples=50)
    @given(
        st.lists(st.integers(0, 10**9), min_size=2, max_size=30),
        st.integers(0, 10**9),
        st.integers(1, 50),
        st.integers(1, 12),
    )
    def test_offset_and_scale_invariance(self, ts, offset, scale, bins):
        ts = sorted(ts)
        base = normalize_timestamps(mk(ts), bins)
        shifted = normalize_timestamps(mk([t + offset for t in ts]), bins)
        scaled = normalize_timestamps(mk([t * scale for t in ts]), bins)
        np.testing.assert_allclose(shifted, base, atol=1e-9)
        np.testing.assert_allclose(scaled, base, atol=1e-9)
        if ts[-1] > ts[0]:
            assert base[0] == 0 and base[-1] == bins - 1


class TestSlice:
    def test_half_open(self):
        assert slice_window(mk([1, 2, 3]), 2, 3).t.tolist() == [2]

    def test_empty_window(self):
        assert len(slice_window(mk([0, 1]), 0, 0)) == 0

    def test_superset(self):
        s = mk([1, 2, 3])
        assert slice_window(s, 0, 10) == s

    def test_invalid(self):
        with pytest.raises(InvalidWindowError):
            slice_window(mk([1]), 5, 2)

    @given(st.lists(st.integers(0, 10**6), min_size=1, max_size=40))
    def test_full_range_identity(self, ts):
        s = mk(sorted(ts))
        assert slice_window(s, int(s.t.min()), int(s.t.max()) + 1) == s

    def test_geometry_kept(self):
        s = mk([1, 2], w=13, h=7)
        out = slice_window(s, 0, 2)
        assert (out.width, out.height) == (13, 7)


class TestStats:
    def test_empty(self):
        st_ = stream_stats(EventStream(4, 4))
        assert st_.count == 0 and st_.mean_rate == 0 and st_.positive_fraction == 0

    def test_rate(self):
        s = mk(np.linspace(0, 1_000_000, 10).astype(int).tolist())
        st_ = stream_stats(s)
        assert st_.positive_fraction == 1.0
        assert st_.duration == 1_000_000
        assert st_.mean_rate == pytest.approx(10.0)

    def test_positive_fraction(self):
        assert stream_stats(mk([0, 1, 2, 3], ps=[1, -1, 1, -1])).positive_fraction == 0.5

    def test_single_event_duration(self):
        assert stream_stats(mk([42])).duration == 0


def test_stream_is_immutable():
    s = mk([1, 2])
    with pytest.raises(ValueError):
        s.t[0] = 5


def test_from_events_roundtrip():
    evs = [Event(1, 2, 3, 1), Event(0, 0, 4, -1)]
    s = EventStream.from_events(4, 4, evs)
    assert list(s) == evs


def test_large_timestamps():
    big = 2**63 + 5
    s = mk([1, big])
    assert int(s.t[-1]) == big
    assert normalize_timestamps(s, 2).tolist() == [0.0, 1.0]
