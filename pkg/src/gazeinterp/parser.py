"""Two-threshold I-VT segmentation of gaze traces into symbolic events."""

from __future__ import annotations

import bisect
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from gazeinterp.errors import InputError, InvariantError
from gazeinterp.signal import GazeTrace, VelocityProfile, compute_velocity


class EventClass(str, Enum):
    FIXATION = "Fixation"
    SACCADE = "Saccade"
    SMOOTH_PURSUIT = "SmoothPursuit"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LabelBins:
    """Maps a value to a label; each edge belongs to the bin above it."""

    edges: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(float(e) for e in self.edges))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(self.edges) + 1:
            raise InputError("label bins need exactly one more label than edges")
        if list(self.edges) != sorted(set(self.edges)):
            raise InputError("label bin edges must be strictly increasing")

    def label(self, value: float) -> str:
        return self.labels[bisect.bisect_right(self.edges, value)]


@dataclass(frozen=True)
class ParserConfig:
    v_low: float = 30.0
    v_high: float = 100.0
    min_fixation_duration: float = 0.05
    min_event_samples: int = 2
    # a run shorter than this between two same-class events is absorbed; 0 disables
    merge_gap: float = 0.0
    duration_bins: LabelBins = LabelBins((0.2, 0.5), ("Brief", "Normal", "Long"))
    amplitude_bins: LabelBins = LabelBins((5.0, 15.0), ("Small", "Medium", "Large"))
    velocity_bins: LabelBins = LabelBins((200.0,), ("Slow", "Fast"))

    def __post_init__(self):
        if not (0 < self.v_low < self.v_high):
            raise InputError(f"need 0 < v_low < v_high, got v_low={self.v_low}, v_high={self.v_high}")
        if self.min_fixation_duration < 0 or self.merge_gap < 0 or self.min_event_samples < 0:
            raise InputError("minimum durations and sample counts must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ParserConfig:
        data = dict(data)
        for key in ("duration_bins", "amplitude_bins", "velocity_bins"):
            if key in data and isinstance(data[key], dict):
                data[key] = LabelBins(tuple(data[key]["edges"]), tuple(data[key]["labels"]))
        return cls(**data)


@dataclass(frozen=True)
class GazeEventPrimitive:
    cls: EventClass
    start_t: float
    end_t: float
    duration: float
    amplitude: float
    peak_velocity: float
    mean_velocity: float
    centroid_yaw: float
    centroid_pitch: float
    labels: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "class": self.cls.value,
            "start_t": self.start_t,
            "end_t": self.end_t,
            "duration": self.duration,
            "amplitude": self.amplitude,
            "peak_velocity": self.peak_velocity,
            "mean_velocity": self.mean_velocity,
            "centroid_yaw": self.centroid_yaw,
            "centroid_pitch": self.centroid_pitch,
            "labels": dict(self.labels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> GazeEventPrimitive:
        return cls(
            cls=EventClass(d["class"]),
            start_t=float(d["start_t"]),
            end_t=float(d["end_t"]),
            duration=float(d["duration"]),
            amplitude=float(d["amplitude"]),
            peak_velocity=float(d["peak_velocity"]),
            mean_velocity=float(d["mean_velocity"]),
            centroid_yaw=float(d["centroid_yaw"]),
            centroid_pitch=float(d["centroid_pitch"]),
            labels={str(k): str(v) for k, v in d["labels"].items()},
        )


@dataclass(frozen=True)
class EventSequence:
    events: tuple[GazeEventPrimitive, ...]
    source: str = "<memory>"
    config: ParserConfig = ParserConfig()

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def classes(self) -> list[EventClass]:
        return [e.cls for e in self.events]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.events)


@dataclass(frozen=True)
class Run:
    """Half-open range of velocity indices sharing one class."""

    cls: EventClass
    start: int
    stop: int

    @property
    def samples(self) -> int:
        return self.stop - self.start


def classify_samples(profile: VelocityProfile, config: ParserConfig) -> list[EventClass]:
    """Three-way threshold rule; values equal to a threshold fall in the middle band."""
    if len(profile) == 0:
        raise InputError("cannot classify an empty velocity profile")
    out = []
    for w in profile.omegas:
        if w < config.v_low:
            out.append(EventClass.FIXATION)
        elif w > config.v_high:
            out.append(EventClass.SACCADE)
        else:
            out.append(EventClass.SMOOTH_PURSUIT)
    return out


def runs_of(classes: Sequence[EventClass]) -> list[Run]:
    runs: list[Run] = []
    start = 0
    for k in range(1, len(classes) + 1):
        if k == len(classes) or classes[k] != classes[start]:
            runs.append(Run(classes[start], start, k))
            start = k
    return runs


def _coalesce(runs: list[Run]) -> list[Run]:
    out: list[Run] = []
    for r in runs:
        if out and out[-1].cls == r.cls:
            out[-1] = Run(r.cls, out[-1].start, r.stop)
        else:
            out.append(r)
    return out


def merge_short_runs(runs: list[Run], t: np.ndarray, config: ParserConfig) -> list[Run]:
    """Fold sub-minimum runs into their longer neighbour until none remain.

    The shortest offending run goes first (earliest on ties); it joins the
    longer adjacent run, the preceding one on ties.
    """

    def dur(r: Run) -> float:
        return float(t[r.stop] - t[r.start])

    def too_short(i: int, runs: list[Run]) -> bool:
        r = runs[i]
        if r.samples < config.min_event_samples:
            return True
        if r.cls is EventClass.FIXATION and dur(r) < config.min_fixation_duration:
            return True
        return (
            0 < i < len(runs) - 1
            and runs[i - 1].cls == runs[i + 1].cls
            and dur(r) < config.merge_gap
        )

    runs = list(runs)
    while len(runs) > 1:
        short = [i for i in range(len(runs)) if too_short(i, runs)]
        if not short:
            break
        i = min(short, key=lambda k: (dur(runs[k]), k))
        if i == 0:
            target = 1
        elif i == len(runs) - 1:
            target = i - 1
        else:
            target = i - 1 if dur(runs[i - 1]) >= dur(runs[i + 1]) else i + 1
        absorber = runs[target]
        lo, hi = min(i, target), max(i, target)
        runs[lo : hi + 1] = [Run(absorber.cls, runs[lo].start, runs[hi].stop)]
        runs = _coalesce(runs)
    return runs


def annotate_event(
    trace: GazeTrace,
    span: tuple[int, int],
    cls: EventClass,
    profile: VelocityProfile,
    config: ParserConfig,
) -> GazeEventPrimitive:
    """Build an event from velocity indices ``span = (start, stop)``, half-open.

    The event covers samples ``start .. stop`` inclusive, so neighbouring
    events share their boundary sample and their boundary time.
    """
    start, stop = span
    if not (0 <= start < stop <= len(profile)) or stop >= trace.sample_count:
        raise InputError(f"span {span} is empty or outside the trace")
    omegas = profile.omegas[start:stop]
    yaw = trace.yaw[start : stop + 1]
    pitch = trace.pitch[start : stop + 1]
    start_t = float(trace.t[start])
    end_t = float(trace.t[stop])
    duration = end_t - start_t
    amplitude = float(np.sqrt((yaw[-1] - yaw[0]) ** 2 + (pitch[-1] - pitch[0]) ** 2))
    peak = float(np.max(omegas))
    # clamp so the float mean never exceeds the max
    mean = min(float(np.mean(omegas)), peak)
    return GazeEventPrimitive(
        cls=cls,
        start_t=start_t,
        end_t=end_t,
        duration=duration,
        amplitude=amplitude,
        peak_velocity=peak,
        mean_velocity=mean,
        centroid_yaw=float(np.mean(yaw)),
        centroid_pitch=float(np.mean(pitch)),
        labels=event_labels(cls, duration, amplitude, peak, config),
    )


def event_labels(cls: EventClass, duration: float, amplitude: float, peak: float, config: ParserConfig) -> dict[str, str]:
    labels = {"duration_label": config.duration_bins.label(duration)}
    if cls is not EventClass.FIXATION:
        labels["amplitude_label"] = config.amplitude_bins.label(amplitude)
    if cls is EventClass.SACCADE:
        labels["velocity_label"] = config.velocity_bins.label(peak)
    return labels


def segment_events(
    classes: Sequence[EventClass],
    trace: GazeTrace,
    config: ParserConfig,
    profile: VelocityProfile | None = None,
) -> EventSequence:
    if len(classes) != trace.sample_count - 1:
        raise InputError(
            f"got {len(classes)} classes for a trace of {trace.sample_count} samples (need N-1)"
        )
    if profile is None:
        profile = compute_velocity(trace)
    runs = merge_short_runs(runs_of(classes), trace.t, config)
    if runs[0].start != 0 or runs[-1].stop != len(classes):
        raise InvariantError("merged runs do not tile the classified span")
    events = tuple(annotate_event(trace, (r.start, r.stop), r.cls, profile, config) for r in runs)
    return EventSequence(events, source=trace.source, config=config)


def parse(trace: GazeTrace, config: ParserConfig | None = None) -> EventSequence:
    """velocity -> per-sample classes -> merged runs -> annotated events."""
    config = config or ParserConfig()
    profile = compute_velocity(trace)
    classes = classify_samples(profile, config)
    return segment_events(classes, trace, config, profile)


def write_events(events: Iterable[GazeEventPrimitive] | EventSequence, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for e in events:
            fh.write(json.dumps(e.to_dict()) + "\n")


def read_events(path: str | Path) -> list[GazeEventPrimitive]:
    with Path(path).open(encoding="utf-8") as fh:
        return [GazeEventPrimitive.from_dict(json.loads(line)) for line in fh if line.strip()]
