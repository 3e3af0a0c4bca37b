"""Synthetic gaze traces with planted, exactly known event boundaries.

Motion is piecewise linear and continuous: fixations hold (or drift slowly
from) the current point, pursuits and saccades move at constant speed along
a fixed direction. Boundaries are placed on the sampling grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gazeinterp.errors import ScriptError
from gazeinterp.parser import EventClass, EventSequence, GazeEventPrimitive, ParserConfig, event_labels
from gazeinterp.signal import GazeTrace

# the parser can't be expected to resolve speeds this close to a threshold
BAND_MARGIN = 1e-6


@dataclass(frozen=True)
class PlantedSegment:
    cls: EventClass
    duration: float
    speed: float = 0.0
    # direction of travel in degrees, 0 = +yaw, 90 = +pitch
    direction: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> PlantedSegment:
        return cls(
            cls=EventClass(d["class"]),
            duration=float(d["duration"]),
            speed=float(d.get("speed", 0.0)),
            direction=float(d.get("direction", 0.0)),
        )

    def to_dict(self) -> dict:
        return {"class": self.cls.value, "duration": self.duration, "speed": self.speed, "direction": self.direction}


@dataclass(frozen=True)
class EventScript:
    segments: tuple[PlantedSegment, ...]
    rate: float = 100.0
    noise: float = 0.0
    seed: int = 0
    start: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def from_dict(cls, d: dict) -> EventScript:
        if "seed" not in d:
            raise ScriptError("script needs an explicit 'seed'")
        return cls(
            segments=tuple(PlantedSegment.from_dict(s) for s in d["segments"]),
            rate=float(d.get("rate", 100.0)),
            noise=float(d.get("noise", 0.0)),
            seed=int(d["seed"]),
            start=tuple(d.get("start", (0.0, 0.0))),
        )

    @classmethod
    def load(cls, path: str | Path) -> EventScript:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ScriptError(f"cannot read script {str(path)!r}: {exc}") from exc
        try:
            return cls.from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ScriptError):
                raise
            raise ScriptError(f"malformed script: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "segments": [s.to_dict() for s in self.segments],
            "rate": self.rate,
            "noise": self.noise,
            "seed": self.seed,
            "start": list(self.start),
        }


def jitter_velocity_bound(noise: float, rate: float) -> float:
    """Worst-case change in per-sample speed caused by uniform jitter.

    Each axis difference moves by at most 2*noise, so the displacement
    vector moves by at most 2*sqrt(2)*noise degrees per sample interval.
    """
    return 2.0 * math.sqrt(2.0) * noise * rate


def segment_samples(seg: PlantedSegment, rate: float) -> int:
    return int(round(seg.duration * rate))


def validate_script(script: EventScript, config: ParserConfig | None = None) -> None:
    config = config or ParserConfig()
    if not (script.rate > 0 and math.isfinite(script.rate)):
        raise ScriptError(f"sampling rate must be positive, got {script.rate}")
    if script.noise < 0:
        raise ScriptError("noise amplitude must be >= 0")
    if not script.segments:
        raise ScriptError("script has no segments")
    slack = jitter_velocity_bound(script.noise, script.rate)
    for i, seg in enumerate(script.segments):
        where = f"segment {i} ({seg.cls.value})"
        if not seg.duration > 0:
            raise ScriptError(f"{where}: duration must be > 0")
        n = segment_samples(seg, script.rate)
        if n < max(1, config.min_event_samples):
            raise ScriptError(f"{where}: {n} sample interval(s) is below the parser minimum")
        if seg.cls is EventClass.FIXATION and n / script.rate < config.min_fixation_duration:
            raise ScriptError(f"{where}: shorter than min_fixation_duration")
        if seg.speed < 0:
            raise ScriptError(f"{where}: speed must be >= 0")
        lo, hi = seg.speed - slack, seg.speed + slack
        if seg.cls is EventClass.FIXATION and not hi < config.v_low - BAND_MARGIN:
            raise ScriptError(f"{where}: speed {seg.speed} deg/s must stay below v_low={config.v_low}")
        if seg.cls is EventClass.SMOOTH_PURSUIT and not (
            config.v_low + BAND_MARGIN < lo and hi < config.v_high - BAND_MARGIN
        ):
            raise ScriptError(
                f"{where}: speed {seg.speed} deg/s must stay inside ({config.v_low}, {config.v_high})"
            )
        if seg.cls is EventClass.SACCADE and not lo > config.v_high + BAND_MARGIN:
            raise ScriptError(f"{where}: speed {seg.speed} deg/s must stay above v_high={config.v_high}")
        if i and seg.cls == script.segments[i - 1].cls:
            raise ScriptError(f"{where}: same class as the previous segment; they would form one event")


def generate_trace(
    script: EventScript, config: ParserConfig | None = None
) -> tuple[GazeTrace, EventSequence]:
    """Sample the script; return the trace and the planted ground truth."""
    config = config or ParserConfig()
    validate_script(script, config)
    rate = script.rate
    counts = [segment_samples(s, rate) for s in script.segments]
    total = sum(counts)
    k = np.arange(total + 1)
    t = k / rate
    yaw = np.empty(total + 1)
    pitch = np.empty(total + 1)
    y0, p0 = float(script.start[0]), float(script.start[1])
    yaw[0], pitch[0] = y0, p0
    truth = []
    first = 0
    for seg, n in zip(script.segments, counts):
        rad = math.radians(seg.direction)
        vy, vp = seg.speed * math.cos(rad), seg.speed * math.sin(rad)
        steps = np.arange(1, n + 1) / rate
        yaw[first + 1 : first + n + 1] = y0 + vy * steps
        pitch[first + 1 : first + n + 1] = p0 + vp * steps
        duration = n / rate
        amplitude = seg.speed * duration
        truth.append(
            GazeEventPrimitive(
                cls=seg.cls,
                start_t=float(t[first]),
                end_t=float(t[first + n]),
                duration=duration,
                amplitude=amplitude,
                peak_velocity=seg.speed,
                mean_velocity=seg.speed,
                centroid_yaw=y0 + vy * duration / 2,
                centroid_pitch=p0 + vp * duration / 2,
                labels=event_labels(seg.cls, duration, amplitude, seg.speed, config),
            )
        )
        y0, p0 = y0 + vy * duration, p0 + vp * duration
        first += n
    if script.noise > 0:
        rng = np.random.default_rng(script.seed)
        yaw = yaw + rng.uniform(-script.noise, script.noise, size=yaw.shape)
        pitch = pitch + rng.uniform(-script.noise, script.noise, size=pitch.shape)
    trace = GazeTrace(t, yaw, pitch, source=f"synthetic:seed={script.seed}")
    return trace, EventSequence(tuple(truth), source=trace.source, config=config)


def random_script(
    rng: np.random.Generator,
    n_segments: int | None = None,
    rate: float = 100.0,
    config: ParserConfig | None = None,
) -> EventScript:
    """A valid zero-noise script with alternating classes and random kinematics."""
    config = config or ParserConfig()
    n_segments = n_segments or int(rng.integers(1, 8))
    segs = []
    prev = None
    for _ in range(n_segments):
        choices = [c for c in EventClass if c is not prev]
        cls = choices[int(rng.integers(len(choices)))]
        if cls is EventClass.FIXATION:
            lo = max(10, math.ceil(config.min_fixation_duration * rate) + 1)
            n = int(rng.integers(lo, lo + 50))
            speed = float(rng.uniform(0, 0.5 * config.v_low)) if rng.random() < 0.5 else 0.0
        elif cls is EventClass.SMOOTH_PURSUIT:
            n = int(rng.integers(5, 60))
            span = config.v_high - config.v_low
            speed = float(rng.uniform(config.v_low + 0.1 * span, config.v_high - 0.1 * span))
        else:
            n = int(rng.integers(max(2, config.min_event_samples), 10))
            speed = float(rng.uniform(1.5 * config.v_high, 6 * config.v_high))
        segs.append(PlantedSegment(cls, n / rate, speed, float(rng.uniform(0, 360))))
        prev = cls
    return EventScript(tuple(segs), rate=rate, noise=0.0, seed=int(rng.integers(2**31)))
