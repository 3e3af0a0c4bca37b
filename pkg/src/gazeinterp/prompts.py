"""Prompt sentinels, few-shot templates and packaged prompt assets.

Every prompt the pipeline sends starts with a sentinel header (or, for the
integration prompt, with the ``CTX:`` delimiter) so the offline template
engine can recognise what it is being asked to do.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from gazeinterp.errors import InputError, MalformedPromptError

GAZE_SENTINEL = "### GAZE NARRATION"
EVAL_SENTINEL = "### NARRATION EVALUATION"
REFINE_SENTINEL = "### NARRATION REFINEMENT"
EVENT_SLOT = "{events}"
DEFAULT_QUERY = "Events:\n{events}\nNarration:"
EXEMPLAR_SEPARATOR = "---"


def read_asset(name: str) -> str:
    return resources.files("gazeinterp").joinpath("assets", name).read_text(encoding="utf-8")


def read_text(path: str | Path | None, default_asset: str) -> str:
    if path is None:
        return read_asset(default_asset)
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read prompt asset {str(path)!r}: {exc}") from exc


def parse_exemplars(text: str) -> tuple[tuple[str, str], ...]:
    """Blocks separated by ``---`` lines; each is ``Events:`` lines then ``Narration:``."""
    out = []
    blocks, cur = [], []
    for line in text.splitlines():
        if line.strip() == EXEMPLAR_SEPARATOR:
            blocks.append(cur)
            cur = []
        else:
            cur.append(line)
    blocks.append(cur)
    for block in blocks:
        body = "\n".join(block).strip()
        if not body:
            continue
        if not body.startswith("Events:") or "\nNarration:" not in body:
            raise InputError("each exemplar needs an 'Events:' block followed by a 'Narration:' line")
        events, narration = body[len("Events:") :].split("\nNarration:", 1)
        out.append((events.strip("\n"), narration.strip()))
    return tuple(out)


@dataclass(frozen=True)
class PromptTemplate:
    """Few-shot prompt with exactly one event slot in ``query``."""

    instruction: str
    exemplars: tuple[tuple[str, str], ...] = ()
    query: str = DEFAULT_QUERY
    sentinel: str = GAZE_SENTINEL

    def __post_init__(self):
        if self.query.count(EVENT_SLOT) != 1:
            raise InputError(f"prompt query must contain {EVENT_SLOT} exactly once")
        if EVENT_SLOT in self.instruction or any(EVENT_SLOT in a or EVENT_SLOT in b for a, b in self.exemplars):
            raise InputError(f"{EVENT_SLOT} may only appear in the query")

    @classmethod
    def from_files(cls, instruction: str | Path | None = None, exemplars: str | Path | None = None) -> PromptTemplate:
        return cls(
            instruction=read_text(instruction, "gaze_instruction.txt").strip(),
            exemplars=parse_exemplars(read_text(exemplars, "gaze_exemplars.txt")),
        )

    def render(self, serialized: str) -> str:
        parts = [self.sentinel, self.instruction, ""]
        for i, (inp, out) in enumerate(self.exemplars, start=1):
            parts += [f"Example {i}:", f"Events:\n{inp}\nNarration: {out}", ""]
        parts.append(self.query.replace(EVENT_SLOT, serialized))
        return "\n".join(parts)


@dataclass(frozen=True)
class PromptAssets:
    """File paths for user-editable prompt text; ``None`` means packaged default."""

    gaze_instruction: str | None = None
    gaze_exemplars: str | None = None
    integration_instruction: str | None = None
    evaluation_instruction: str | None = None
    refine_instruction: str | None = None
    rubrics: str | None = None

    def gaze_template(self) -> PromptTemplate:
        return PromptTemplate.from_files(self.gaze_instruction, self.gaze_exemplars)

    def integration_system(self) -> str:
        return read_text(self.integration_instruction, "integration_instruction.txt").strip()

    def evaluation_text(self) -> str:
        return read_text(self.evaluation_instruction, "evaluation_instruction.txt").strip()

    def refine_text(self) -> str:
        return read_text(self.refine_instruction, "refine_instruction.txt").strip()

    def rubric_data(self) -> dict:
        try:
            return json.loads(read_text(self.rubrics, "rubrics.json"))
        except json.JSONDecodeError as exc:
            raise InputError(f"rubric asset is not valid JSON: {exc}") from exc


@dataclass(frozen=True)
class Sections:
    """Named blocks of a sentinel prompt, split on ``NAME:`` header lines."""

    header: str
    blocks: dict[str, str] = field(default_factory=dict)


def split_sections(prompt: str, names: tuple[str, ...]) -> Sections:
    lines = prompt.split("\n")
    header = lines[0] if lines else ""
    blocks: dict[str, list[str]] = {}
    current = None
    for line in lines[1:]:
        if line.endswith(":") and line[:-1] in names and line[:-1] not in blocks:
            current = line[:-1]
            blocks[current] = []
        elif current is not None:
            blocks[current].append(line)
    return Sections(header, {k: "\n".join(v) for k, v in blocks.items()})


CTX = "CTX:"
GAZE = "GAZE:"
MOTION = "MOTION:"
NONE_MARK = "(none)"


def _delimiter(line: str) -> str | None:
    for d in (CTX, GAZE, MOTION):
        if line == d or line == f"{d} {NONE_MARK}":
            return d
    return None


def split_integration_prompt(prompt: str) -> tuple[list[str], str, list[str]]:
    """Check the CTX/GAZE/MOTION grammar and return (ctx lines, gaze text, motion lines).

    Each delimiter must sit on its own line exactly once and in order; the
    gaze text is everything between the GAZE and MOTION lines, byte for byte.
    """
    lines = prompt.split("\n")
    found = [(i, d) for i, line in enumerate(lines) if (d := _delimiter(line)) is not None]
    names = [d for _, d in found]
    if names != [CTX, GAZE, MOTION]:
        raise MalformedPromptError(f"expected delimiters CTX:, GAZE:, MOTION: once each in order, found {names}")
    (ci, _), (gi, _), (mi, _) = found
    if ci != 0:
        raise MalformedPromptError("prompt must begin with the CTX: delimiter")
    if lines[gi] != GAZE:
        raise MalformedPromptError("GAZE: section may not be empty")
    gaze = "\n".join(lines[gi + 1 : mi])
    if not gaze.strip():
        raise MalformedPromptError("GAZE: section may not be empty")
    ctx = [] if lines[ci] != CTX else lines[ci + 1 : gi]
    motion = [] if lines[mi] != MOTION else lines[mi + 1 :]
    return ctx, gaze, motion
