import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazeinterp import prompts
from gazeinterp.backend import ScriptedProvider
from gazeinterp.errors import InputError
from gazeinterp.parser import EventClass, EventSequence, GazeEventPrimitive, ParserConfig, event_labels, parse
from gazeinterp.prompts import PromptAssets, PromptTemplate, parse_exemplars
from gazeinterp.signal import GazeTrace, load_trace
from gazeinterp.synthesis import GazeNarration, fmt, narrate_gaze, serialize_event, serialize_events, serialize_raw


def make_event(cls, start=1.0, duration=0.3, amplitude=8.0, peak=250.0):
    return GazeEventPrimitive(
        cls=cls,
        start_t=start,
        end_t=start + duration,
        duration=duration,
        amplitude=amplitude,
        peak_velocity=peak,
        mean_velocity=peak / 2,
        centroid_yaw=-0.0004,
        centroid_pitch=2.5,
        labels=event_labels(cls, duration, amplitude, peak, ParserConfig()),
    )


def test_fmt_three_decimals_no_negative_zero():
    assert fmt(1.23456) == "1.235"
    assert fmt(-0.0001) == "0.000"
    assert fmt(-1.5) == "-1.500"


def test_serialize_saccade_line():
    line = serialize_event(make_event(EventClass.SACCADE))
    assert line == (
        "Saccade start=1.000s duration=0.300s (Normal) amplitude=8.000deg (Medium) "
        "peak_velocity=250.000deg/s (Fast) centroid=(0.000deg, 2.500deg)"
    )


def test_serialize_fixation_omits_amplitude():
    line = serialize_event(make_event(EventClass.FIXATION, peak=3.0))
    assert "amplitude" not in line and "(Slow)" not in line
    assert line.startswith("Fixation start=1.000s duration=0.300s (Normal) peak_velocity=3.000deg/s")


def test_serialize_sorts_and_rejects_empty():
    a = make_event(EventClass.FIXATION, start=2.0)
    b = make_event(EventClass.SACCADE, start=0.5)
    text = serialize_events(EventSequence((a, b)))
    assert text.splitlines()[0].startswith("Saccade start=0.500s")
    with pytest.raises(InputError):
        serialize_events(EventSequence(()))


def test_serialize_is_deterministic(demo):
    events = parse(load_trace(demo / "trace.csv"))
    assert serialize_events(events) == serialize_events(events)
    assert len(serialize_events(events).splitlines()) == len(events)


def test_serialize_raw_thins_and_keeps_last():
    trace = GazeTrace([i * 0.01 for i in range(1000)], [0.0] * 1000, [0.0] * 1000)
    lines = serialize_raw(trace, max_lines=100).splitlines()
    assert len(lines) <= 101
    assert lines[-1].startswith("Sample t=9.990s")


def test_exemplar_parsing():
    text = "Events:\nFixation a\nNarration: looks.\n---\nEvents:\nSaccade b\nSaccade c\nNarration: jumps twice.\n"
    assert parse_exemplars(text) == (("Fixation a", "looks."), ("Saccade b\nSaccade c", "jumps twice."))
    with pytest.raises(InputError):
        parse_exemplars("Narration: only")


def test_template_slot_rules():
    with pytest.raises(InputError):
        PromptTemplate("do it", query="no slot")
    with pytest.raises(InputError):
        PromptTemplate("do it", query="{events} {events}")
    with pytest.raises(InputError):
        PromptTemplate("use {events}")


def test_packaged_template_renders_exemplars_then_query():
    tpl = PromptAssets().gaze_template()
    assert len(tpl.exemplars) >= 1
    out = tpl.render("Fixation start=0.000s")
    assert out.startswith(prompts.GAZE_SENTINEL)
    assert out.index("Example 1:") < out.rindex("Events:\nFixation start=0.000s\nNarration:")
    assert out.endswith("Narration:")


def test_custom_asset_files(tmp_path):
    ins = tmp_path / "ins.txt"
    ins.write_text("Describe the gaze plainly.\n")
    ex = tmp_path / "ex.txt"
    ex.write_text("Events:\nX\nNarration: Y\n")
    tpl = PromptAssets(gaze_instruction=str(ins), gaze_exemplars=str(ex)).gaze_template()
    assert tpl.instruction == "Describe the gaze plainly." and tpl.exemplars == (("X", "Y"),)
    with pytest.raises(InputError):
        PromptAssets(gaze_instruction=str(tmp_path / "missing.txt")).gaze_template()


def test_narrate_gaze_with_template_backend(template, demo):
    events = parse(load_trace(demo / "trace.csv"))
    n = narrate_gaze(events, PromptAssets().gaze_template(), template, segment_id=1)
    assert n.text and n.segment_id == 1
    assert n.serialized_events in n.prompt
    assert n.text == narrate_gaze(events, PromptAssets().gaze_template(), template, 1).text


def test_narrate_rejects_empty_output():
    backend = ScriptedProvider({"narrate": ["   "]})
    seq = EventSequence((make_event(EventClass.FIXATION, peak=1.0),))
    with pytest.raises(Exception, match="empty"):
        narrate_gaze(seq, PromptAssets().gaze_template(), backend)


def test_gaze_narration_requires_text():
    with pytest.raises(InputError):
        GazeNarration(" ", 1, "x")


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_fmt_round_trips_to_three_decimals(x):
    s = fmt(x)
    assert s.split(".")[1].__len__() == 3
    assert abs(float(s) - x) <= 0.0005 + 1e-9 * abs(x)


def test_single_fixation_line_and_template_sentence(template):
    e = GazeEventPrimitive(EventClass.FIXATION, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, {"duration_label": "Long"})
    text = serialize_events(EventSequence((e,)))
    assert len(text.splitlines()) == 1
    assert text.startswith("Fixation") and "duration=1.000s" in text
    n = narrate_gaze(EventSequence((e,)), PromptAssets().gaze_template(), template)
    assert n.text.startswith("The user fixates")
