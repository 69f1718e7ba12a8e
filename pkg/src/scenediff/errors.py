"""Exception hierarchy shared across the package."""


class SceneDiffError(Exception):
    """Base class for all scenediff errors."""


class ShapeMismatch(SceneDiffError):
    """An array argument does not have the expected shape."""


class PlacementFailure(SceneDiffError):
    """Obstacles could not be placed without overlap within the retry budget."""


class PathFailure(SceneDiffError):
    """No collision-free trajectory was found for the requested behavior."""


class IoFailure(SceneDiffError):
    """A dataset, checkpoint, or report could not be read or written."""


class SchemaViolation(SceneDiffError):
    """A dataset line does not match the JSON-lines sample schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonFiniteLoss(SceneDiffError):
    """A training loss evaluated to NaN or infinity."""


class BadSchedule(SceneDiffError):
    """A diffusion schedule violates its invariants."""


class EmptyRegion(SceneDiffError):
    """No scene point fell inside the proposed key region."""


class MissingStage1(SceneDiffError):
    """Diffusion training was started without a stage-1 (VAE) checkpoint."""


class InsufficientRuns(SceneDiffError):
    """Too few evaluation runs to aggregate a confidence interval."""
