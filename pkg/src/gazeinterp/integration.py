"""Segment alignment, sliding history and the CTX/GAZE/MOTION integration prompt."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from gazeinterp import prompts
from gazeinterp.backend import Provider
from gazeinterp.errors import AlignmentError, InputError, MalformedPromptError
from gazeinterp.signal import GazeTrace
from gazeinterp.synthesis import GazeNarration, fmt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MotionNarration:
    start_t: float
    end_t: float
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise InputError("motion narration text must be nonempty")
        if not self.end_t > self.start_t:
            raise InputError(f"motion narration needs end_t > start_t, got [{self.start_t}, {self.end_t}]")

    def to_dict(self) -> dict:
        return {"start_t": self.start_t, "end_t": self.end_t, "text": self.text}


@dataclass(frozen=True)
class MotionNarrationSequence:
    items: tuple[MotionNarration, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        starts = [m.start_t for m in self.items]
        if starts != sorted(starts):
            raise InputError("motion narrations must be ordered by start_t")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def overlapping(self, start: float, end: float) -> MotionNarrationSequence:
        return MotionNarrationSequence(tuple(m for m in self.items if m.start_t < end and m.end_t > start))


def load_motions(path: str | Path) -> MotionNarrationSequence:
    items = []
    try:
        with Path(path).open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    items.append(MotionNarration(float(obj["start_t"]), float(obj["end_t"]), str(obj["text"])))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise InputError(f"{path}: line {line_no}: bad motion narration ({exc})") from None
    except OSError as exc:
        raise InputError(f"cannot read motions file {str(path)!r}: {exc}") from exc
    items.sort(key=lambda m: (m.start_t, m.end_t))
    return MotionNarrationSequence(tuple(items))


@dataclass(frozen=True)
class SegmentationPolicy:
    kind: Literal["motion_intervals", "fixed_window"] = "motion_intervals"
    # window length in seconds; also the fallback when there are no motions
    window: float = 5.0

    def __post_init__(self):
        if self.kind not in ("motion_intervals", "fixed_window"):
            raise InputError(f"unknown segmentation policy {self.kind!r}")


@dataclass(frozen=True)
class SegmentInput:
    segment_id: int
    start_t: float
    end_t: float
    trace: GazeTrace
    motions: MotionNarrationSequence


def _spans_from_motions(motions: MotionNarrationSequence) -> list[tuple[float, float]]:
    spans: list[list[float]] = []
    for m in motions:
        if spans and m.start_t < spans[-1][1]:
            spans[-1][1] = max(spans[-1][1], m.end_t)
        else:
            spans.append([m.start_t, m.end_t])
    return [(a, b) for a, b in spans]


def _spans_fixed(trace: GazeTrace, window: float) -> list[tuple[float, float]]:
    if not window > 0:
        raise AlignmentError(f"window length must be positive, got {window}")
    t0, t1 = float(trace.t[0]), float(trace.t[-1])
    spans = []
    k = 0
    while t0 + k * window <= t1:
        spans.append((t0 + k * window, t0 + (k + 1) * window))
        k += 1
    return spans


def align_segments(
    trace: GazeTrace, motions: MotionNarrationSequence, policy: SegmentationPolicy = SegmentationPolicy()
) -> list[SegmentInput]:
    """Cut the recording into ordered, non-overlapping segments.

    Overlapping motion intervals are merged into one segment. Gaze samples
    are assigned half-open ``[start, end)``, except that the last segment is
    closed. Segments with fewer than two gaze samples are skipped.
    """
    if policy.kind == "motion_intervals" and len(motions):
        spans = _spans_from_motions(motions)
    else:
        spans = _spans_fixed(trace, policy.window)
    out = []
    t = trace.t
    for i, (a, b) in enumerate(spans):
        lo = int(np.searchsorted(t, a, side="left"))
        hi = int(np.searchsorted(t, b, side="right" if i == len(spans) - 1 else "left"))
        if hi - lo < 2:
            logger.warning("skipping segment [%s, %s): %d gaze sample(s)", fmt(a), fmt(b), hi - lo)
            continue
        out.append(SegmentInput(len(out) + 1, a, b, trace.slice(lo, hi), motions.overlapping(a, b)))
    if not out:
        raise AlignmentError("gaze trace does not overlap any segment span")
    return out


@dataclass(frozen=True)
class HistoryContext:
    prior_narrations: tuple[str, ...] = ()
    last_feedback: str | None = None
    scene_metadata: tuple[tuple[str, str], ...] = ()

    def to_dict(self) -> dict:
        return {
            "prior_narrations": list(self.prior_narrations),
            "last_feedback": self.last_feedback,
            "scene_metadata": {k: v for k, v in self.scene_metadata},
        }

    @classmethod
    def from_dict(cls, d: dict) -> HistoryContext:
        return cls(
            tuple(d.get("prior_narrations", ())),
            d.get("last_feedback"),
            tuple((str(k), str(v)) for k, v in d.get("scene_metadata", {}).items()),
        )


@dataclass(frozen=True)
class IntegratedNarration:
    text: str
    segment_id: int | None = None
    history: HistoryContext = HistoryContext()
    scores: dict[str, int] = field(default_factory=dict)
    iterations: int = 0

    def __post_init__(self):
        if not self.text.strip():
            raise InputError("integrated narration text must be nonempty")


def update_history(
    h: HistoryContext,
    narration: IntegratedNarration | str,
    feedback: str | None = None,
    w: int = 2,
) -> HistoryContext:
    """Append, keep the newest ``w`` narrations, replace the feedback slot."""
    if w < 0:
        raise ValueError(f"window size must be >= 0, got {w}")
    text = narration.text if isinstance(narration, IntegratedNarration) else narration
    kept = (h.prior_narrations + (text,))[-w:] if w else ()
    return HistoryContext(kept, feedback or None, h.scene_metadata)


def _one_line(text: str) -> str:
    return " ".join(text.split())


def render_context(h: HistoryContext) -> list[str]:
    lines = [f"history[{i}]: {_one_line(t)}" for i, t in enumerate(h.prior_narrations, start=1)]
    if h.last_feedback:
        lines.append(f"feedback: {_one_line(h.last_feedback)}")
    lines += [f"scene.{_one_line(k)}: {_one_line(v)}" for k, v in h.scene_metadata]
    return lines


def build_integrated_prompt(
    h: HistoryContext, gaze: GazeNarration | str, motions: MotionNarrationSequence | Iterable[MotionNarration]
) -> str:
    gaze_text = gaze.text if isinstance(gaze, GazeNarration) else gaze
    if not gaze_text.strip():
        raise InputError("gaze narration must be nonempty")
    ctx = render_context(h)
    motion_lines = [f"[{fmt(m.start_t)}s, {fmt(m.end_t)}s] {_one_line(m.text)}" for m in motions]
    parts = [prompts.CTX, *ctx] if ctx else [f"{prompts.CTX} {prompts.NONE_MARK}"]
    parts += [prompts.GAZE, gaze_text]
    parts += [prompts.MOTION, *motion_lines] if motion_lines else [f"{prompts.MOTION} {prompts.NONE_MARK}"]
    prompt = "\n".join(parts)
    if verify_integrated_prompt(prompt) != gaze_text:
        raise MalformedPromptError("gaze narration contains a delimiter line and cannot be embedded verbatim")
    return prompt


def verify_integrated_prompt(prompt: str) -> str:
    """Check the delimiter grammar and return the GAZE section verbatim."""
    return prompts.split_integration_prompt(prompt)[1]


def integrate(prompt: str, backend: Provider, system: str | None = None) -> str:
    verify_integrated_prompt(prompt)
    return backend.complete(prompt, route="integrate", system=system)
