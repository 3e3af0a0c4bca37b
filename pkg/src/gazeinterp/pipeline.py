"""End-to-end driver: trace + motion narrations -> one record per segment."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

from gazeinterp.backend import Provider
from gazeinterp.config import PipelineConfig
from gazeinterp.errors import BackendError, InputError
from gazeinterp.integration import (
    HistoryContext,
    IntegratedNarration,
    MotionNarrationSequence,
    SegmentInput,
    align_segments,
    build_integrated_prompt,
    integrate,
    update_history,
)
from gazeinterp.parser import parse
from gazeinterp.refinement import LoopTranscript, QualityRubric, self_correct
from gazeinterp.signal import GazeTrace, smooth_trace
from gazeinterp.synthesis import narrate_serialized, serialize_events, serialize_raw

logger = logging.getLogger(__name__)


class PipelineAborted(BackendError):
    """A segment failed; records up to and including it were already emitted."""

    def __init__(self, message: str, records: list[PipelineRecord]):
        super().__init__(message)
        self.records = records


@dataclass
class PipelineRecord:
    segment_id: int
    start_t: float
    end_t: float
    event_count: int
    serialized_events: str
    motions: list[dict]
    history: dict
    gaze: dict = field(default_factory=dict)
    integrated: dict | None = None
    status: str = "ok"
    error: str | None = None
    timing: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "segment_id": self.segment_id,
            "start_t": self.start_t,
            "end_t": self.end_t,
            "event_count": self.event_count,
            "serialized_events": self.serialized_events,
            "motions": self.motions,
            "history": self.history,
            "gaze": self.gaze,
            "integrated": self.integrated,
            "status": self.status,
            "error": self.error,
        }
        if self.timing is not None:
            d["timing"] = self.timing
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def _loop_or_skip(text, rubric_dims, kind, context, config, backend, assets) -> tuple[str, LoopTranscript]:
    if not (config.ablation.self_correction and rubric_dims):
        return text, LoopTranscript(final_text=text)
    rubric = QualityRubric.from_assets(kind, assets, rubric_dims)
    return self_correct(
        text, rubric, config.loop, context, backend, assets.evaluation_text(), assets.refine_text()
    )


def process_segment(
    seg: SegmentInput,
    history: HistoryContext,
    config: PipelineConfig,
    backend: Provider,
    eval_backend: Provider,
) -> tuple[PipelineRecord, IntegratedNarration | None, LoopTranscript | None]:
    started = time.perf_counter()
    assets = config.prompts
    abl = config.ablation
    if abl.symbolic_parser:
        events = parse(seg.trace, config.parser)
        serialized, event_count = serialize_events(events), len(events)
    else:
        serialized, event_count = serialize_raw(seg.trace), 0
    record = PipelineRecord(
        segment_id=seg.segment_id,
        start_t=seg.start_t,
        end_t=seg.end_t,
        event_count=event_count,
        serialized_events=serialized,
        motions=[m.to_dict() for m in seg.motions],
        history=history.to_dict(),
    )

    def done(rec: PipelineRecord) -> PipelineRecord:
        if config.record_timing:
            rec.timing = {"elapsed_s": time.perf_counter() - started}
        return rec

    if abl.hierarchical:
        gaze = narrate_serialized(serialized, assets.gaze_template(), backend, seg.segment_id)
        gaze_text, gaze_tr = _loop_or_skip(
            gaze.text, abl.gaze_dimensions, "gaze", serialized, config, _Split(backend, eval_backend), assets
        )
        record.gaze = {"prompt": gaze.prompt, "initial": gaze.text, "text": gaze_text, "transcript": gaze_tr.to_dict()}
        if gaze_tr.termination == "evaluation_failed":
            record.status, record.error = "failed", f"gaze evaluation: {gaze_tr.error}"
            return done(record), None, gaze_tr
    else:
        # no separate gaze stage: the symbolic events go straight into GAZE
        gaze_text = serialized
        record.gaze = {"prompt": None, "initial": None, "text": gaze_text, "transcript": None}

    prompt = build_integrated_prompt(history, gaze_text, seg.motions)
    initial = integrate(prompt, backend, system=assets.integration_system())
    text, tr = _loop_or_skip(
        initial, abl.integrated_dimensions, "integrated", prompt, config, _Split(backend, eval_backend), assets
    )
    record.integrated = {"prompt": prompt, "initial": initial, "text": text, "transcript": tr.to_dict()}
    if tr.termination == "evaluation_failed":
        record.status, record.error = "failed", f"integrated evaluation: {tr.error}"
        return done(record), None, tr
    narration = IntegratedNarration(
        text=text,
        segment_id=seg.segment_id,
        history=history,
        scores=tr.final_scores or {},
        iterations=tr.eval_calls,
    )
    return done(record), narration, tr


class _Split(Provider):
    """Sends evaluation requests to one provider and everything else to another."""

    def __init__(self, main: Provider, evaluator: Provider):
        self.main, self.evaluator = main, evaluator

    def generate(self, request):
        target = self.evaluator if request.route == "evaluate" else self.main
        return target.generate(request)

    def embed(self, text):
        return self.main.embed(text)


def run_pipeline(
    trace: GazeTrace,
    motions: MotionNarrationSequence,
    config: PipelineConfig,
    backend: Provider,
    eval_backend: Provider | None = None,
    sink: Callable[[PipelineRecord], None] | None = None,
) -> list[PipelineRecord]:
    """Process segments in order, threading the sliding history through them.

    Each record is handed to ``sink`` as soon as it exists, so a failure
    leaves every finished segment already written.
    """
    eval_backend = eval_backend or backend
    if config.generation.kind == "remote" and config.ablation.hierarchical and not config.prompts.gaze_template().exemplars:
        # zero-shot is only acceptable for the rule-based template engine
        raise InputError("a remote provider needs at least one gaze few-shot exemplar")
    if config.smoothing_window:
        trace = smooth_trace(trace, config.smoothing_window)
    segments = align_segments(trace, motions, config.segmentation)
    history = HistoryContext(scene_metadata=tuple((str(k), str(v)) for k, v in config.scene_metadata.items()))
    records: list[PipelineRecord] = []
    for seg in segments:
        logger.info("segment %d [%.3f, %.3f): %d gaze samples, %d motions",
                    seg.segment_id, seg.start_t, seg.end_t, seg.trace.sample_count, len(seg.motions))
        record, narration, tr = process_segment(seg, history, config, backend, eval_backend)
        records.append(record)
        if sink:
            sink(record)
        if narration is None:
            raise PipelineAborted(f"segment {seg.segment_id}: {record.error}", records)
        feedback = tr.last_critique if tr and tr.termination != "skipped" else None
        history = update_history(history, narration, feedback, config.window)
    return records
