import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gazeinterp.errors import ScriptError
from gazeinterp.parser import EventClass, ParserConfig, parse
from gazeinterp.signal import compute_velocity
from gazeinterp.synthgen import (
    EventScript,
    PlantedSegment,
    generate_trace,
    jitter_velocity_bound,
    random_script,
    validate_script,
)

F, S, P = EventClass.FIXATION, EventClass.SACCADE, EventClass.SMOOTH_PURSUIT


def boundaries_within(parsed, truth, rate, tol_samples=1):
    if [e.cls for e in parsed] != [e.cls for e in truth]:
        return False
    return all(
        abs(a.start_t - b.start_t) <= tol_samples / rate + 1e-9 and abs(a.end_t - b.end_t) <= tol_samples / rate + 1e-9
        for a, b in zip(parsed, truth)
    )


def test_demo_script_is_recovered(demo):
    script = EventScript.load(demo / "script.json")
    trace, truth = generate_trace(script)
    assert trace.sample_count == 1201
    assert len(truth) == 11
    assert boundaries_within(parse(trace), truth, script.rate, 0)


def test_generation_is_seeded():
    script = EventScript((PlantedSegment(F, 0.5), PlantedSegment(P, 0.3, 50.0, 30.0)), noise=0.05, seed=3)
    a, _ = generate_trace(script)
    b, _ = generate_trace(script)
    c, _ = generate_trace(EventScript(script.segments, noise=0.05, seed=4))
    assert a.equals(b)
    assert not a.equals(c)


def test_truth_attributes_are_analytic():
    script = EventScript((PlantedSegment(P, 0.5, 40.0, 90.0),), seed=0, start=(1.0, 2.0))
    trace, truth = generate_trace(script)
    (e,) = truth
    assert e.duration == 0.5 and e.amplitude == pytest.approx(20.0)
    assert (e.centroid_yaw, e.centroid_pitch) == pytest.approx((1.0, 12.0))
    assert trace.pitch[-1] == pytest.approx(22.0)


@pytest.mark.parametrize(
    "segments, match",
    [
        ((), "no segments"),
        ((PlantedSegment(F, 0.5, 40.0),), "below v_low"),
        ((PlantedSegment(P, 0.5, 120.0),), "inside"),
        ((PlantedSegment(S, 0.05, 80.0),), "above v_high"),
        ((PlantedSegment(F, 0.03),), "min_fixation_duration"),
        ((PlantedSegment(S, 0.01, 300.0),), "below the parser minimum"),
        ((PlantedSegment(F, 0.5), PlantedSegment(F, 0.5)), "same class"),
        ((PlantedSegment(P, 0.5, 30.0),), "inside"),
    ],
)
def test_invalid_scripts(segments, match):
    with pytest.raises(ScriptError, match=match):
        validate_script(EventScript(segments))


def test_noise_margin_is_checked():
    # 60 deg/s sits inside the band, but jitter of 0.2 deg at 100 Hz could push it out
    seg = (PlantedSegment(P, 0.5, 60.0),)
    validate_script(EventScript(seg, noise=0.01))
    with pytest.raises(ScriptError):
        validate_script(EventScript(seg, noise=0.2))


def test_script_requires_seed():
    with pytest.raises(ScriptError, match="seed"):
        EventScript.from_dict({"segments": [{"class": "Fixation", "duration": 1.0}]})


def test_script_load_errors(tmp_path):
    p = tmp_path / "s.json"
    p.write_text("{not json")
    with pytest.raises(ScriptError):
        EventScript.load(p)
    p.write_text('{"seed": 1, "segments": [{"class": "Blink", "duration": 1}]}')
    with pytest.raises(ScriptError):
        EventScript.load(p)


def test_script_dict_round_trip(demo):
    script = EventScript.load(demo / "script.json")
    assert EventScript.from_dict(script.to_dict()) == script


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_scripts_recovered_exactly(seed):
    script = random_script(np.random.default_rng(seed))
    trace, truth = generate_trace(script)
    assert boundaries_within(parse(trace), truth, script.rate, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.05))
def test_jitter_bound_holds(seed, noise):
    script = random_script(np.random.default_rng(seed), n_segments=3)
    clean, _ = generate_trace(script)
    noisy_script = EventScript(script.segments, script.rate, noise, script.seed, script.start)
    try:
        validate_script(noisy_script)
    except ScriptError:
        assume(False)
    noisy, _ = generate_trace(noisy_script)
    diff = np.abs(compute_velocity(noisy).omegas - compute_velocity(clean).omegas)
    assert np.all(diff <= jitter_velocity_bound(noise, script.rate) + 1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_small_noise_still_within_one_sample(seed):
    rng = np.random.default_rng(seed)
    script = random_script(rng, rate=100.0)
    noisy = EventScript(script.segments, script.rate, 0.005, script.seed, script.start)
    try:
        validate_script(noisy)
    except ScriptError:
        assume(False)
    trace, truth = generate_trace(noisy)
    assert boundaries_within(parse(trace), truth, noisy.rate, 1)


def test_random_script_respects_custom_thresholds():
    cfg = ParserConfig(v_low=10, v_high=40)
    for seed in range(20):
        script = random_script(np.random.default_rng(seed), config=cfg)
        validate_script(script, cfg)


@pytest.mark.parametrize("rate", [30.0, 250.0, 1000.0])
def test_random_scripts_valid_at_any_rate(rate):
    rng = np.random.default_rng(int(rate))
    for _ in range(30):
        script = random_script(rng, rate=rate)
        validate_script(script)
        trace, truth = generate_trace(script)
        assert boundaries_within(parse(trace), truth, rate, 0)
