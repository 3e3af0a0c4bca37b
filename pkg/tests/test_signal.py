import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_trace
from gazeinterp.errors import TraceFormatError
from gazeinterp.signal import GazeTrace, compute_velocity, load_trace, smooth_trace, write_trace
from oracles import velocity_bruteforce


def test_two_row_csv(fixtures):
    trace = load_trace(fixtures / "two_rows.csv")
    assert trace.sample_count == 2
    assert trace.samples[1].t == 0.01 and trace.samples[1].yaw == 1.0


def test_nonmonotonic_rejected(fixtures):
    with pytest.raises(TraceFormatError, match="non-monotonic") as exc:
        load_trace(fixtures / "nonmonotonic.csv")
    assert exc.value.line == 4


def test_duplicate_timestamp_rejected(tmp_path):
    p = tmp_path / "dup.csv"
    p.write_text("t,yaw,pitch\n0.0,0,0\n0.0,1,1\n")
    with pytest.raises(TraceFormatError):
        load_trace(p)


def test_nan_rejected_by_default(fixtures):
    with pytest.raises(TraceFormatError, match="line 3"):
        load_trace(fixtures / "with_nan.csv")


def test_nan_dropped_under_policy(fixtures):
    trace = load_trace(fixtures / "with_nan.csv", invalid="drop_invalid")
    assert trace.sample_count == 3
    assert list(trace.t) == [0.0, 0.02, 0.03]


def test_malformed_names_line(fixtures):
    with pytest.raises(TraceFormatError, match="line 3"):
        load_trace(fixtures / "malformed.csv", invalid="drop_invalid")


def test_bad_header(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("time,x,y\n0,0,0\n")
    with pytest.raises(TraceFormatError, match="header"):
        load_trace(p)


def test_missing_file(tmp_path):
    with pytest.raises(TraceFormatError):
        load_trace(tmp_path / "nope.csv")


def test_empty_after_filtering(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("t,yaw,pitch\n0.0,nan,0\n")
    with pytest.raises(TraceFormatError, match="empty"):
        load_trace(p, invalid="drop_invalid")


def test_jsonl_matches_csv(tmp_path, fixtures):
    p = tmp_path / "t.jsonl"
    p.write_text('{"t": 0.0, "yaw": 0, "pitch": 0}\n{"t": 0.01, "yaw": 1, "pitch": 0}\n')
    assert load_trace(p).equals(load_trace(fixtures / "two_rows.csv"))


def test_jsonl_null_is_drop_eligible(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text('{"t": 0.0, "yaw": 0, "pitch": 0}\n{"t": 0.01, "yaw": null, "pitch": 0}\n{"t": 0.02, "yaw": 1, "pitch": 0}\n')
    assert load_trace(p, invalid="drop_invalid").sample_count == 2
    with pytest.raises(TraceFormatError, match="line 2"):
        load_trace(p)


def test_jsonl_string_value_is_malformed(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text('{"t": 0.0, "yaw": "x", "pitch": 0}\n')
    with pytest.raises(TraceFormatError, match="not numeric"):
        load_trace(p, invalid="drop_invalid")


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_round_trip_bit_exact(tmp_path, rng, fmt):
    trace = random_trace(rng, 500)
    p = tmp_path / f"trace.{fmt}"
    write_trace(trace, p)
    again = load_trace(p)
    assert again.equals(trace)
    assert again.t.tobytes() == trace.t.tobytes()


def test_stationary_velocity_is_zero():
    trace = GazeTrace([0.0, 0.01], [3.0, 3.0], [-1.0, -1.0])
    assert compute_velocity(trace).omegas.tolist() == [0.0]


def test_hand_evaluated_velocity():
    # sqrt(0.36 + 0.64) / 0.01
    trace = GazeTrace([0.0, 0.01], [0.0, 0.6], [0.0, 0.8])
    assert compute_velocity(trace).omegas[0] == pytest.approx(100.0, rel=1e-12)


def test_velocity_needs_two_samples():
    with pytest.raises(TraceFormatError):
        compute_velocity(GazeTrace([0.0], [0.0], [0.0]))


def test_velocity_matches_bruteforce(rng):
    trace = random_trace(rng, 1000)
    got = compute_velocity(trace).omegas
    want = velocity_bruteforce(trace.t.tolist(), trace.yaw.tolist(), trace.pitch.tolist())
    assert len(got) == trace.sample_count - 1
    for g, w in zip(got, want):
        assert math.isclose(g, w, rel_tol=1e-9, abs_tol=0.0) or (g == w == 0)


def test_trace_is_read_only(rng):
    trace = random_trace(rng, 10)
    with pytest.raises(ValueError):
        trace.yaw[0] = 1.0


def test_smoothing_off_is_identity(rng):
    trace = random_trace(rng, 50)
    assert smooth_trace(trace, 0) is trace


def test_smoothing_centered_mean():
    trace = GazeTrace([0, 1, 2, 3, 4], [0.0, 3.0, 6.0, 0.0, 3.0], [0.0] * 5)
    sm = smooth_trace(trace, 3)
    assert sm.yaw.tolist() == pytest.approx([1.5, 3.0, 3.0, 3.0, 1.5])
    with pytest.raises(ValueError):
        smooth_trace(trace, 4)


coords = st.floats(-90, 90, allow_nan=False)


@st.composite
def traces(draw, min_size=2, max_size=40):
    n = draw(st.integers(min_size, max_size))
    dts = draw(st.lists(st.floats(1e-3, 0.1), min_size=n, max_size=n))
    t = np.cumsum(dts)
    yaw = draw(st.lists(coords, min_size=n, max_size=n))
    pitch = draw(st.lists(coords, min_size=n, max_size=n))
    return GazeTrace(t, yaw, pitch)


@given(traces())
def test_velocity_nonnegative_and_zero_iff_still(trace):
    w = compute_velocity(trace).omegas
    assert len(w) == trace.sample_count - 1
    assert np.all(w >= 0)
    still = (np.diff(trace.yaw) == 0) & (np.diff(trace.pitch) == 0)
    assert np.array_equal(w == 0, still)


@given(traces(), st.floats(-100, 100))
def test_time_shift_invariance(trace, shift):
    shifted = GazeTrace(trace.t + shift, trace.yaw, trace.pitch)
    if np.any(np.diff(shifted.t) <= 0):
        return
    np.testing.assert_allclose(
        compute_velocity(shifted).omegas, compute_velocity(trace).omegas, rtol=1e-6, atol=1e-9
    )


@given(traces(), st.floats(-45, 45), st.floats(-45, 45))
def test_angle_offset_invariance(trace, dy, dp):
    moved = GazeTrace(trace.t, trace.yaw + dy, trace.pitch + dp)
    np.testing.assert_allclose(compute_velocity(moved).omegas, compute_velocity(trace).omegas, rtol=1e-6, atol=1e-6)


@given(traces(), st.floats(0.1, 10))
def test_time_dilation_covariance(trace, alpha):
    t0 = trace.t[0]
    dilated = GazeTrace(t0 + (trace.t - t0) * alpha, trace.yaw, trace.pitch)
    np.testing.assert_allclose(
        compute_velocity(dilated).omegas, compute_velocity(trace).omegas / alpha, rtol=1e-6, atol=1e-9
    )


@settings(max_examples=20)
@given(traces())
def test_velocity_deterministic(trace):
    assert compute_velocity(trace).omegas.tobytes() == compute_velocity(trace).omegas.tobytes()
