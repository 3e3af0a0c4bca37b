"""Gaze traces: loading and angular velocity.

Times are seconds, angles are degrees. A trace is stored column-wise as
read-only numpy arrays; ``GazeTrace.samples`` gives the row view.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from gazeinterp.errors import InvariantError, TraceFormatError

logger = logging.getLogger(__name__)

CSV_HEADER = ("t", "yaw", "pitch")
InvalidPolicy = Literal["reject", "drop_invalid"]


@dataclass(frozen=True)
class GazeSample:
    t: float
    yaw: float
    pitch: float


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GazeTrace:
    """Ordered yaw/pitch samples with strictly increasing timestamps."""

    t: np.ndarray
    yaw: np.ndarray
    pitch: np.ndarray
    source: str = "<memory>"

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen(self.t))
        object.__setattr__(self, "yaw", _frozen(self.yaw))
        object.__setattr__(self, "pitch", _frozen(self.pitch))
        n = self.t.shape[0]
        if self.t.ndim != 1 or self.yaw.shape != (n,) or self.pitch.shape != (n,):
            raise TraceFormatError("t, yaw and pitch must be 1-D arrays of equal length")
        if n < 1:
            raise TraceFormatError("trace is empty")
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.yaw)) and np.all(np.isfinite(self.pitch))):
            raise TraceFormatError("trace contains non-finite values")
        bad = np.flatnonzero(np.diff(self.t) <= 0)
        if bad.size:
            j = int(bad[0]) + 1
            raise TraceFormatError(
                f"non-monotonic timestamps: t[{j}]={self.t[j]!r} follows t[{j - 1}]={self.t[j - 1]!r}"
            )

    @classmethod
    def from_samples(cls, samples: Iterable[GazeSample], source: str = "<memory>") -> GazeTrace:
        samples = list(samples)
        return cls(
            t=[s.t for s in samples],
            yaw=[s.yaw for s in samples],
            pitch=[s.pitch for s in samples],
            source=source,
        )

    @property
    def sample_count(self) -> int:
        return int(self.t.shape[0])

    def __len__(self) -> int:
        return self.sample_count

    @property
    def samples(self) -> tuple[GazeSample, ...]:
        return tuple(
            GazeSample(float(t), float(y), float(p)) for t, y, p in zip(self.t, self.yaw, self.pitch)
        )

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def slice(self, start: int, stop: int) -> GazeTrace:
        return GazeTrace(self.t[start:stop], self.yaw[start:stop], self.pitch[start:stop], source=self.source)

    def equals(self, other: GazeTrace) -> bool:
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.yaw, other.yaw)
            and np.array_equal(self.pitch, other.pitch)
        )


@dataclass(frozen=True, eq=False)
class VelocityProfile:
    """Angular speed per velocity index j = 1..N-1, stored 0-based.

    ``omegas[k]`` is the speed between samples k and k+1.
    """

    omegas: np.ndarray = field()

    def __post_init__(self):
        object.__setattr__(self, "omegas", _frozen(self.omegas))

    def __len__(self) -> int:
        return int(self.omegas.shape[0])


def compute_velocity(trace: GazeTrace) -> VelocityProfile:
    """Instantaneous angular speed in deg/s between consecutive samples."""
    if trace.sample_count < 2:
        raise TraceFormatError(f"need at least 2 samples to compute velocity, got {trace.sample_count}")
    dt = np.diff(trace.t)
    if np.any(dt <= 0):
        raise InvariantError("non-positive time delta in a validated trace")
    dyaw = np.diff(trace.yaw)
    dpitch = np.diff(trace.pitch)
    return VelocityProfile(np.hypot(dyaw, dpitch) / dt)


def smooth_trace(trace: GazeTrace, window: int) -> GazeTrace:
    """Centered moving average over yaw and pitch.

    ``window`` must be odd; near the edges the window shrinks to the samples
    available. ``window <= 1`` returns the trace unchanged.
    """
    if window <= 1:
        return trace
    if window % 2 == 0:
        raise ValueError(f"smoothing window must be odd, got {window}")
    half = window // 2
    n = trace.sample_count

    def _avg(x: np.ndarray) -> np.ndarray:
        csum = np.concatenate([[0.0], np.cumsum(x)])
        idx = np.arange(n)
        lo = np.maximum(idx - half, 0)
        hi = np.minimum(idx + half + 1, n)
        return (csum[hi] - csum[lo]) / (hi - lo)

    return GazeTrace(trace.t, _avg(trace.yaw), _avg(trace.pitch), source=trace.source)


def _parse_number(raw, name: str, line: int) -> float | None:
    """Return a float, or None for a missing value. Raises on garbage."""
    if raw is None:
        return None
    if isinstance(raw, bool):
        raise TraceFormatError(f"field {name!r} is not numeric: {raw!r}", line)
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        if raw.strip() == "":
            return None
        try:
            return float(raw)
        except ValueError:
            raise TraceFormatError(f"field {name!r} is not numeric: {raw!r}", line) from None
    raise TraceFormatError(f"field {name!r} is not numeric: {raw!r}", line)


def _iter_csv(path: Path):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError("file is empty", 1) from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise TraceFormatError(f"expected header 't,yaw,pitch', got {','.join(header)!r}", 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise TraceFormatError(f"expected 3 fields, got {len(row)}", line)
            yield line, row[0], row[1], row[2]


def _iter_jsonl(path: Path):
    with path.open(encoding="utf-8") as fh:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"invalid JSON: {exc.msg}", line) from None
            if not isinstance(obj, dict):
                raise TraceFormatError("expected a JSON object", line)
            missing = [k for k in ("t", "yaw", "pitch") if k not in obj]
            if missing:
                raise TraceFormatError(f"missing field(s) {missing}", line)
            yield line, obj["t"], obj["yaw"], obj["pitch"]


def load_trace(
    path: str | Path,
    format: Literal["csv", "jsonl"] | None = None,
    invalid: InvalidPolicy = "reject",
) -> GazeTrace:
    """Read and validate a gaze trace.

    ``format`` defaults to the file extension. Rows whose yaw or pitch is
    missing or non-finite are dropped under ``invalid="drop_invalid"`` and
    rejected otherwise; a bad timestamp is always an error.
    """
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    if format not in ("csv", "jsonl"):
        raise TraceFormatError(f"unknown trace format {format!r}")
    if invalid not in ("reject", "drop_invalid"):
        raise ValueError(f"unknown invalid-row policy {invalid!r}")
    if not path.is_file():
        raise TraceFormatError(f"cannot read trace file {str(path)!r}")

    rows = _iter_csv(path) if format == "csv" else _iter_jsonl(path)
    ts: list[float] = []
    yaws: list[float] = []
    pitches: list[float] = []
    dropped = 0
    try:
        for line, raw_t, raw_y, raw_p in rows:
            t = _parse_number(raw_t, "t", line)
            if t is None or not math.isfinite(t):
                raise TraceFormatError(f"invalid timestamp {raw_t!r}", line)
            y = _parse_number(raw_y, "yaw", line)
            p = _parse_number(raw_p, "pitch", line)
            if y is None or p is None or not (math.isfinite(y) and math.isfinite(p)):
                if invalid == "drop_invalid":
                    dropped += 1
                    continue
                raise TraceFormatError(f"missing or non-finite yaw/pitch ({raw_y!r}, {raw_p!r})", line)
            if ts and t <= ts[-1]:
                raise TraceFormatError(f"non-monotonic timestamp {t!r} after {ts[-1]!r}", line)
            ts.append(t)
            yaws.append(y)
            pitches.append(p)
    except (OSError, UnicodeDecodeError) as exc:
        raise TraceFormatError(f"cannot read trace file {str(path)!r}: {exc}") from exc
    if dropped:
        logger.warning("dropped %d invalid row(s) from %s", dropped, path)
    if not ts:
        raise TraceFormatError("trace is empty after filtering")
    return GazeTrace(ts, yaws, pitches, source=str(path))


def write_trace(trace: GazeTrace, path: str | Path, format: Literal["csv", "jsonl"] | None = None) -> None:
    """Write a trace; floats use ``repr`` so reloading is bit-exact."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        if format == "csv":
            fh.write(",".join(CSV_HEADER) + "\n")
            for s in trace.samples:
                fh.write(f"{s.t!r},{s.yaw!r},{s.pitch!r}\n")
        else:
            for s in trace.samples:
                fh.write(json.dumps({"t": s.t, "yaw": s.yaw, "pitch": s.pitch}) + "\n")
