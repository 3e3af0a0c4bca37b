"""Exception hierarchy. The CLI maps each top-level class to an exit code."""


class GazeInterpError(Exception):
    """Base class for all package errors."""


class InputError(GazeInterpError, ValueError):
    """Bad user-supplied data or configuration."""


class TraceFormatError(InputError):
    """A gaze trace file could not be read or validated."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AlignmentError(InputError):
    """Gaze and motion inputs cannot be aligned into segments."""


class ScriptError(InputError):
    """A synthetic event script is invalid for the parser it targets."""


class MalformedPromptError(InputError):
    """An integration prompt does not follow the CTX/GAZE/MOTION grammar."""


class BackendError(GazeInterpError):
    """A text-generation or embedding provider failed."""


class AuthenticationError(BackendError):
    """Missing or rejected credential."""


class RetryExhaustedError(BackendError):
    """All attempts against a remote provider failed."""


class EmptyOutputError(BackendError):
    """A provider returned nothing usable."""


class TemplateMissError(BackendError):
    """The offline template engine does not recognise the prompt shape."""


class EvaluationError(BackendError):
    """An evaluator reply could not be turned into a valid score vector."""


class InvariantError(GazeInterpError):
    """An internal invariant was violated; indicates a bug, not bad input."""
