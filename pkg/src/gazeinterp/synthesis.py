"""Event serialization and few-shot gaze narration."""

from __future__ import annotations

from dataclasses import dataclass

from gazeinterp.backend import Provider
from gazeinterp.errors import InputError
from gazeinterp.parser import EventClass, EventSequence, GazeEventPrimitive
from gazeinterp.prompts import PromptTemplate
from gazeinterp.signal import GazeTrace


def fmt(x: float) -> str:
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def serialize_event(e: GazeEventPrimitive) -> str:
    parts = [e.cls.value, f"start={fmt(e.start_t)}s", f"duration={fmt(e.duration)}s"]
    if "duration_label" in e.labels:
        parts.append(f"({e.labels['duration_label']})")
    if e.cls is not EventClass.FIXATION:
        parts.append(f"amplitude={fmt(e.amplitude)}deg")
        if "amplitude_label" in e.labels:
            parts.append(f"({e.labels['amplitude_label']})")
    parts.append(f"peak_velocity={fmt(e.peak_velocity)}deg/s")
    if "velocity_label" in e.labels:
        parts.append(f"({e.labels['velocity_label']})")
    parts.append(f"centroid=({fmt(e.centroid_yaw)}deg, {fmt(e.centroid_pitch)}deg)")
    return " ".join(parts)


def serialize_events(events: EventSequence) -> str:
    """One line per event, temporal order, three decimals throughout."""
    if len(events) == 0:
        raise InputError("cannot serialize an empty event sequence")
    ordered = sorted(events, key=lambda e: e.start_t)
    return "\n".join(serialize_event(e) for e in ordered)


def serialize_raw(trace: GazeTrace, max_lines: int = 200) -> str:
    """Raw samples as text, evenly thinned to ``max_lines``; used when the parser is ablated."""
    n = trace.sample_count
    step = max(1, -(-n // max_lines))
    idx = list(range(0, n, step))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return "\n".join(
        f"Sample t={fmt(trace.t[i])}s yaw={fmt(trace.yaw[i])}deg pitch={fmt(trace.pitch[i])}deg" for i in idx
    )


@dataclass(frozen=True)
class GazeNarration:
    text: str
    segment_id: int | None
    serialized_events: str
    prompt: str = ""

    def __post_init__(self):
        if not self.text.strip():
            raise InputError("gaze narration text must be nonempty")


def narrate_serialized(
    serialized: str, template: PromptTemplate, backend: Provider, segment_id: int | None = None
) -> GazeNarration:
    prompt = template.render(serialized)
    text = backend.complete(prompt, route="narrate")
    return GazeNarration(text=text, segment_id=segment_id, serialized_events=serialized, prompt=prompt)


def narrate_gaze(
    events: EventSequence, template: PromptTemplate, backend: Provider, segment_id: int | None = None
) -> GazeNarration:
    return narrate_serialized(serialize_events(events), template, backend, segment_id)
