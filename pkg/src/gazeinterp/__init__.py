"""Gaze signal parsing and eye-body narration pipeline."""

from gazeinterp.errors import (
    AlignmentError,
    AuthenticationError,
    BackendError,
    EvaluationError,
    GazeInterpError,
    InputError,
    InvariantError,
    MalformedPromptError,
    TraceFormatError,
)
from gazeinterp.parser import EventClass, EventSequence, GazeEventPrimitive, ParserConfig, parse
from gazeinterp.signal import GazeSample, GazeTrace, VelocityProfile, compute_velocity, load_trace

__all__ = [
    "AlignmentError",
    "AuthenticationError",
    "BackendError",
    "EvaluationError",
    "EventClass",
    "EventSequence",
    "GazeEventPrimitive",
    "GazeInterpError",
    "GazeSample",
    "GazeTrace",
    "InputError",
    "InvariantError",
    "MalformedPromptError",
    "ParserConfig",
    "TraceFormatError",
    "VelocityProfile",
    "compute_velocity",
    "load_trace",
    "parse",
]

__version__ = "0.1.0"
