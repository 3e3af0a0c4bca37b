import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_trace
from gazeinterp.errors import InputError
from gazeinterp.parser import (
    EventClass,
    LabelBins,
    ParserConfig,
    Run,
    classify_samples,
    merge_short_runs,
    parse,
    read_events,
    runs_of,
    segment_events,
    write_events,
)
from gazeinterp.signal import GazeTrace, VelocityProfile, compute_velocity, load_trace
from oracles import ivt_rule

F, S, P = EventClass.FIXATION, EventClass.SACCADE, EventClass.SMOOTH_PURSUIT


def test_stationary_trace_is_one_fixation(fixtures):
    events = parse(load_trace(fixtures / "stationary.csv"))
    assert len(events) == 1
    (e,) = events
    assert e.cls is F
    assert e.duration == pytest.approx(1.0)
    assert e.amplitude == 0.0 and e.peak_velocity == 0.0
    assert (e.centroid_yaw, e.centroid_pitch) == pytest.approx((2.5, -1.0))
    assert e.labels == {"duration_label": "Long"}


def test_boundary_velocities_go_to_middle_band():
    cfg = ParserConfig()
    got = classify_samples(VelocityProfile(np.array([29.999, 30.0, 100.0, 100.001])), cfg)
    assert got == [F, P, P, S]


def test_classify_matches_rule(rng):
    cfg = ParserConfig()
    omegas = rng.uniform(0, 300, 5000)
    got = classify_samples(VelocityProfile(omegas), cfg)
    assert [c.value for c in got] == [ivt_rule(w, 30, 100) for w in omegas]


def test_classify_empty_profile():
    with pytest.raises(InputError):
        classify_samples(VelocityProfile(np.array([])), ParserConfig())


def test_threshold_ordering_enforced():
    with pytest.raises(InputError):
        ParserConfig(v_low=100, v_high=30)
    with pytest.raises(InputError):
        ParserConfig(v_low=0)


def test_label_bins_edges_go_up():
    bins = ParserConfig().duration_bins
    assert [bins.label(x) for x in (0.0, 0.1999, 0.2, 0.4999, 0.5, 3.0)] == [
        "Brief", "Brief", "Normal", "Normal", "Long", "Long"
    ]
    amp = ParserConfig().amplitude_bins
    assert [amp.label(x) for x in (4.9, 5.0, 14.9, 15.0)] == ["Small", "Medium", "Medium", "Large"]
    assert ParserConfig().velocity_bins.label(200.0) == "Fast"


def test_label_bins_validation():
    with pytest.raises(InputError):
        LabelBins((1.0,), ("a",))
    with pytest.raises(InputError):
        LabelBins((2.0, 1.0), ("a", "b", "c"))


def test_runs_of():
    assert runs_of([F, F, S, P, P]) == [Run(F, 0, 2), Run(S, 2, 3), Run(P, 3, 5)]


def test_single_sample_saccade_absorbed_by_longer_neighbour():
    t = np.arange(12) * 0.01
    runs = [Run(F, 0, 6), Run(S, 6, 7), Run(P, 7, 11)]
    assert merge_short_runs(runs, t, ParserConfig()) == [Run(F, 0, 7), Run(P, 7, 11)]


def test_merge_tie_goes_to_preceding():
    t = np.arange(12) * 0.01
    runs = [Run(P, 0, 5), Run(S, 5, 6), Run(F, 6, 11)]
    assert merge_short_runs(runs, t, ParserConfig()) == [Run(P, 0, 6), Run(F, 6, 11)]


def test_short_fixation_absorbed():
    t = np.arange(20) * 0.01
    # 3-sample fixation lasts 0.03 s < 0.05 s
    runs = [Run(P, 0, 8), Run(F, 8, 11), Run(P, 11, 19)]
    assert merge_short_runs(runs, t, ParserConfig()) == [Run(P, 0, 19)]


def test_merge_gap_absorbs_bridging_run():
    t = np.arange(30) * 0.01
    runs = [Run(F, 0, 10), Run(P, 10, 13), Run(F, 13, 29)]
    assert merge_short_runs(runs, t, ParserConfig()) == runs
    assert merge_short_runs(runs, t, ParserConfig(merge_gap=0.05)) == [Run(F, 0, 29)]


def test_segment_events_needs_n_minus_one_classes(rng):
    trace = random_trace(rng, 10)
    with pytest.raises(InputError):
        segment_events([F] * 10, trace, ParserConfig())


def test_two_sample_trace_yields_one_event(fixtures):
    events = parse(load_trace(fixtures / "two_rows.csv"))
    assert len(events) == 1
    assert events.events[0].cls is P  # 1 deg / 0.01 s = 100 deg/s, inclusive middle band
    assert events.events[0].peak_velocity == pytest.approx(100.0)


def test_attribute_set_depends_on_class():
    yaw = np.concatenate([np.zeros(21), 1.2 * np.arange(1, 6), np.full(10, 6.0), 6 + 0.5 * np.arange(1, 21)])
    t = np.arange(len(yaw)) * 0.01
    trace = GazeTrace(t, yaw, np.zeros_like(t))
    ev = parse(trace).events
    assert [e.cls for e in ev] == [F, S, F, P]
    assert set(ev[0].labels) == {"duration_label"}
    assert set(ev[1].labels) == {"duration_label", "amplitude_label", "velocity_label"}
    assert set(ev[3].labels) == {"duration_label", "amplitude_label"}
    assert ev[1].labels["velocity_label"] == "Slow" and ev[1].labels["amplitude_label"] == "Medium"


def test_event_jsonl_round_trip(tmp_path, rng):
    events = parse(random_trace(rng, 800))
    path = tmp_path / "e.jsonl"
    write_events(events, path)
    assert tuple(read_events(path)) == events.events
    first = json.loads(path.read_text().splitlines()[0])
    assert first["class"] in {"Fixation", "Saccade", "SmoothPursuit"}


def test_golden_demo_parse(demo, fixtures):
    events = parse(load_trace(demo / "trace.csv"))
    assert events.to_jsonl() == (fixtures / "demo_events.golden.jsonl").read_text()


def test_golden_matches_planted_truth(fixtures):
    golden = read_events(fixtures / "demo_events.golden.jsonl")
    truth = read_events(fixtures / "demo_truth.jsonl")
    assert [e.cls for e in golden] == [e.cls for e in truth]
    for g, w in zip(golden, truth):
        assert g.start_t == pytest.approx(w.start_t, abs=1e-9)
        assert g.end_t == pytest.approx(w.end_t, abs=1e-9)
        assert g.amplitude == pytest.approx(w.amplitude, abs=1e-9)
        assert g.peak_velocity == pytest.approx(w.peak_velocity, rel=1e-9, abs=1e-9)
        assert g.labels == w.labels


def check_sequence_invariants(trace, events, config):
    ev = events.events
    assert ev, "a trace of >= 2 samples always yields an event"
    assert ev[0].start_t == trace.t[0] and ev[-1].end_t == trace.t[-1]
    for a, b in zip(ev, ev[1:]):
        assert a.end_t == b.start_t
        assert a.cls != b.cls
    for e in ev:
        assert e.duration > 0
        assert e.amplitude >= 0
        assert 0 <= e.mean_velocity <= e.peak_velocity
        if e.cls is F:
            assert e.duration >= config.min_fixation_duration or len(ev) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 400))
def test_parse_invariants(seed, n):
    trace = random_trace(np.random.default_rng(seed), n)
    cfg = ParserConfig()
    check_sequence_invariants(trace, parse(trace, cfg), cfg)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 300), st.floats(1, 60), st.floats(1.1, 5))
def test_parse_invariants_under_any_thresholds(seed, n, v_low, ratio):
    trace = random_trace(np.random.default_rng(seed), n)
    cfg = ParserConfig(v_low=v_low, v_high=v_low * ratio)
    check_sequence_invariants(trace, parse(trace, cfg), cfg)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(5, 90), st.floats(5, 60), st.floats(5, 60))
def test_threshold_monotonicity(seed, v_low, d_low, d_high):
    # raising v_low adds fixation samples; raising v_high removes saccade samples
    trace = random_trace(np.random.default_rng(seed), 300)
    profile = compute_velocity(trace)
    base = ParserConfig(v_low=v_low, v_high=v_low + 20)
    more_fix = ParserConfig(v_low=v_low + d_low, v_high=v_low + d_low + 20)
    higher = ParserConfig(v_low=v_low, v_high=v_low + 20 + d_high)
    c0 = classify_samples(profile, base)
    assert classify_samples(profile, more_fix).count(F) >= c0.count(F)
    assert classify_samples(profile, higher).count(S) <= c0.count(S)


def test_parse_deterministic(rng):
    trace = random_trace(rng, 1500)
    assert parse(trace).to_jsonl() == parse(trace).to_jsonl()


def test_parser_config_dict_round_trip():
    cfg = ParserConfig(v_low=20, v_high=90, merge_gap=0.02)
    assert ParserConfig.from_dict(cfg.to_dict()) == cfg
