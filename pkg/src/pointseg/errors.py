"""Exception hierarchy.

Validation problems (bad shapes, bad arguments, malformed files) derive from
``ValidationError`` and map to CLI exit code 2; failures while running a
pipeline stage derive from ``StageError`` and map to exit code 3.
"""


class PointsegError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PointsegError, ValueError):
    """Input violates a documented contract."""


class ShapeError(ValidationError):
    """Array shapes or sequence lengths do not line up."""


class ArgumentError(ValidationError):
    """A scalar argument is out of its allowed range."""


class ConfigurationError(ValidationError):
    """Configuration cannot be honoured (e.g. a prototype is missing)."""


class LoadError(ValidationError):
    """A manifest or data file could not be loaded."""

    def __init__(self, message, field=None, path=None, line=None):
        self.field = field
        self.path = path
        self.line = line
        parts = [message]
        if field is not None:
            parts.append(f"field={field}")
        if path is not None:
            parts.append(f"path={path}")
        if line is not None:
            parts.append(f"line={line}")
        super().__init__("; ".join(parts))


class TrainingError(PointsegError):
    """The classifier has nothing to learn from."""


class ModelError(PointsegError):
    """A fitted model cannot produce a prediction."""


class StageError(PointsegError):
    """A pipeline stage failed for a specific video."""

    def __init__(self, stage, video_id, cause):
        self.stage = stage
        self.video_id = video_id
        self.cause = cause
        where = f" (video {video_id})" if video_id is not None else ""
        super().__init__(f"stage '{stage}' failed{where}: {cause}")
