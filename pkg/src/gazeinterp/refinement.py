"""Rubric evaluation and the threshold-governed self-correcting loop."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

from gazeinterp import prompts
from gazeinterp.backend import GenerationRequest, Provider
from gazeinterp.errors import BackendError, EvaluationError, InputError

logger = logging.getLogger(__name__)

GAZE_DIMENSIONS = ("Continuity",)
INTEGRATED_DIMENSIONS = ("Match", "Temporal", "Completeness")
RubricKind = Literal["gaze", "integrated"]


@dataclass(frozen=True)
class QualityRubric:
    kind: RubricKind
    dimensions: tuple[str, ...]
    anchors: Mapping[str, tuple[str, str]]

    def __post_init__(self):
        full = GAZE_DIMENSIONS if self.kind == "gaze" else INTEGRATED_DIMENSIONS
        if self.kind not in ("gaze", "integrated"):
            raise InputError(f"unknown rubric kind {self.kind!r}")
        # a proper ordered subset is allowed for dimension ablations
        if not self.dimensions or [d for d in full if d in self.dimensions] != list(self.dimensions):
            raise InputError(f"{self.kind} rubric dimensions must be an ordered subset of {full}")
        for d in self.dimensions:
            high, low = self.anchors.get(d, ("", ""))
            if not (high.strip() and low.strip()):
                raise InputError(f"rubric dimension {d} needs nonempty score-5 and score-0 anchors")

    @classmethod
    def from_assets(
        cls, kind: RubricKind, assets: prompts.PromptAssets | None = None, dimensions: Sequence[str] | None = None
    ) -> QualityRubric:
        data = (assets or prompts.PromptAssets()).rubric_data()
        try:
            table = data[kind]
            anchors = {d: (v["high"], v["low"]) for d, v in table.items()}
        except (KeyError, TypeError) as exc:
            raise InputError(f"rubric asset lacks a well-formed {kind!r} table") from exc
        full = GAZE_DIMENSIONS if kind == "gaze" else INTEGRATED_DIMENSIONS
        return cls(kind, tuple(dimensions) if dimensions is not None else full, anchors)


def gaze_rubric() -> QualityRubric:
    return QualityRubric.from_assets("gaze")


def integrated_rubric() -> QualityRubric:
    return QualityRubric.from_assets("integrated")


@dataclass(frozen=True)
class LoopConfig:
    k_max: int = 3
    tau: float | Mapping[str, float] = 4.5

    def __post_init__(self):
        if self.k_max < 1:
            raise InputError("k_max must be >= 1")
        values = self.tau.values() if isinstance(self.tau, Mapping) else [self.tau]
        if any(not 0 <= v <= 5 for v in values):
            raise InputError("every threshold must lie in [0, 5]")

    def thresholds(self, rubric: QualityRubric) -> dict[str, float]:
        """Scalar tau broadcasts to every dimension; a mapping overrides per dimension."""
        if isinstance(self.tau, Mapping):
            return {d: float(self.tau.get(d, 4.5)) for d in rubric.dimensions}
        return {d: float(self.tau) for d in rubric.dimensions}


# --------------------------------------------------------------------------
# evaluation


def parse_eval_output(raw: str, rubric: QualityRubric) -> tuple[dict[str, int], str]:
    """Use the first JSON object in ``raw``; validate it against ``rubric``."""
    decoder = json.JSONDecoder()
    block = None
    pos = raw.find("{")
    while pos >= 0:
        try:
            obj, _ = decoder.raw_decode(raw, pos)
        except json.JSONDecodeError:
            pos = raw.find("{", pos + 1)
            continue
        if isinstance(obj, dict):
            block = obj
            break
        pos = raw.find("{", pos + 1)
    if block is None:
        raise EvaluationError("no structured score block in evaluator reply")
    missing = [d for d in rubric.dimensions if d not in block]
    if missing:
        raise EvaluationError(f"score block is missing dimension(s) {missing}")
    scores = {}
    for d in rubric.dimensions:
        v = block[d]
        if isinstance(v, bool) or not isinstance(v, int):
            raise EvaluationError(f"score for {d} is not an integer: {v!r}")
        scores[d] = v
    critique = block.get("critique", "")
    if critique is None:
        critique = ""
    if not isinstance(critique, str):
        raise EvaluationError("critique must be a string")
    return scores, critique.strip()


class ScoreRangeError(EvaluationError):
    pass


def _check_range(scores: dict[str, int]) -> None:
    bad = {d: s for d, s in scores.items() if not 0 <= s <= 5}
    if bad:
        raise ScoreRangeError(f"score(s) outside 0-5: {bad}")


def build_eval_prompt(narration: str, rubric: QualityRubric, context: str, instruction: str) -> str:
    keys = ", ".join(f'"{d}"' for d in rubric.dimensions)
    lines = [f"{prompts.EVAL_SENTINEL} [{rubric.kind}]", instruction, "Rubric:"]
    lines += [f"- {d}: 5 = {rubric.anchors[d][0]} 0 = {rubric.anchors[d][1]}" for d in rubric.dimensions]
    lines.append(
        f"Reply with exactly one JSON object with integer keys {keys} (each 0-5) and a string key \"critique\"."
    )
    lines += ["SOURCE:", context, "NARRATION:", narration]
    return "\n".join(lines)


def evaluate(
    narration: str,
    rubric: QualityRubric,
    context: str,
    backend: Provider,
    instruction: str | None = None,
) -> tuple[dict[str, int], str]:
    """Score a narration; one re-ask on an unparseable reply, then fail."""
    if instruction is None:
        instruction = prompts.PromptAssets().evaluation_text()
    prompt = build_eval_prompt(narration, rubric, context, instruction)
    raw = _ask(backend, prompt)
    try:
        scores, critique = parse_eval_output(raw, rubric)
    except EvaluationError as first:
        logger.warning("evaluator reply unparseable (%s); asking again", first)
        retry = f"{prompt}\n\nYour previous reply could not be used ({first}). Reply with only the JSON object."
        scores, critique = parse_eval_output(_ask(backend, retry), rubric)
    _check_range(scores)
    return scores, critique


def _ask(backend: Provider, prompt: str) -> str:
    return backend.generate(GenerationRequest(prompt, route="evaluate"))


# --------------------------------------------------------------------------
# refinement


def build_refine_prompt(narration: str, critique: str, context: str, kind: str, instruction: str) -> str:
    return "\n".join(
        [f"{prompts.REFINE_SENTINEL} [{kind}]", instruction, "SOURCE:", context, "CRITIQUE:", critique, "NARRATION:", narration]
    )


def refine(
    narration: str,
    critique: str,
    context: str,
    backend: Provider,
    kind: str = "integrated",
    instruction: str | None = None,
) -> str:
    if not critique.strip():
        raise InputError("refinement needs a nonempty critique")
    if instruction is None:
        instruction = prompts.PromptAssets().refine_text()
    return backend.complete(build_refine_prompt(narration, critique, context, kind, instruction), route="refine")


# --------------------------------------------------------------------------
# the loop


@dataclass
class IterationRecord:
    narration: str
    scores: dict[str, int]
    critique: str

    def to_dict(self) -> dict:
        return {"narration": self.narration, "scores": dict(self.scores), "critique": self.critique}


@dataclass
class LoopTranscript:
    iterations: list[IterationRecord] = field(default_factory=list)
    eval_calls: int = 0
    refine_calls: int = 0
    termination: Literal["threshold_met", "budget_exhausted", "evaluation_failed", "skipped"] = "skipped"
    error: str | None = None
    final_text: str = ""

    @property
    def final_scores(self) -> dict[str, int] | None:
        """Scores of the returned text, when it was evaluated."""
        for rec in reversed(self.iterations):
            if rec.narration == self.final_text:
                return rec.scores
        return None

    @property
    def last_critique(self) -> str | None:
        return self.iterations[-1].critique if self.iterations else None

    def to_dict(self) -> dict:
        return {
            "iterations": [r.to_dict() for r in self.iterations],
            "eval_calls": self.eval_calls,
            "refine_calls": self.refine_calls,
            "termination": self.termination,
            "error": self.error,
            "final_text": self.final_text,
        }


def passes(scores: Mapping[str, int], thresholds: Mapping[str, float]) -> bool:
    return all(scores[d] >= t for d, t in thresholds.items())


def _fallback_critique(scores: Mapping[str, int], thresholds: Mapping[str, float]) -> str:
    low = [f"{d} ({scores[d]}/5)" for d, t in thresholds.items() if scores[d] < t]
    return "Improve " + ", ".join(low) + "."


def self_correct(
    initial: str,
    rubric: QualityRubric,
    config: LoopConfig,
    context: str,
    backend: Provider,
    eval_instruction: str | None = None,
    refine_instruction: str | None = None,
) -> tuple[str, LoopTranscript]:
    """Evaluate, and refine while any score is under its threshold.

    Returns early with the current narration once all thresholds are met;
    otherwise returns the last refinement after ``k_max`` rounds. An
    evaluation failure stops the loop and returns the best-scored narration
    seen so far (the initial one if none was scored).
    """
    thresholds = config.thresholds(rubric)
    transcript = LoopTranscript()
    current = best = initial
    best_total = None
    for _ in range(config.k_max):
        try:
            transcript.eval_calls += 1
            scores, critique = evaluate(current, rubric, context, backend, eval_instruction)
        except BackendError as exc:
            transcript.termination = "evaluation_failed"
            transcript.error = f"{type(exc).__name__}: {exc}"
            transcript.final_text = best
            logger.error("evaluation failed: %s", exc)
            return best, transcript
        transcript.iterations.append(IterationRecord(current, scores, critique))
        total = sum(scores.values())
        if best_total is None or total > best_total:
            best, best_total = current, total
        if passes(scores, thresholds):
            transcript.termination = "threshold_met"
            transcript.final_text = current
            return current, transcript
        if not critique:
            critique = _fallback_critique(scores, thresholds)
            transcript.iterations[-1].critique = critique
        transcript.refine_calls += 1
        current = refine(current, critique, context, backend, rubric.kind, refine_instruction)
    transcript.termination = "budget_exhausted"
    transcript.final_text = current
    return current, transcript
