"""Exception hierarchy for the tvspc package."""

from __future__ import annotations


class TvspcError(Exception):
    """Base class for all tvspc errors."""


class SchemaError(TvspcError):
    """Log file header does not match the expected column schema."""


class LogParseError(TvspcError):
    """A log row is structurally unusable (bad timestamp, wrong arity)."""


class EmptyInputError(TvspcError):
    """A log file contained a header but no data rows."""


class TimestampOrderError(TvspcError):
    """Timestamps within one log file are not strictly increasing."""


class UnfillableError(TvspcError):
    """A variable has no observation at all for an entire day."""

    def __init__(self, day, variable: str):
        super().__init__(f"variable {variable!r} has no data on {day}; cannot fill")
        self.day = day
        self.variable = variable


class DegenerateSliceError(TvspcError):
    """Every variable is constant at a time slice; no PCA model exists there."""

    def __init__(self, k: int):
        super().__init__(f"slice k={k}: all variables constant, nothing to train")
        self.k = k


class EigenConvergenceError(TvspcError):
    """The Jacobi eigensolver did not converge within the sweep limit."""

    def __init__(self, k: int | None = None):
        where = "" if k is None else f" at slice k={k}"
        super().__init__(f"symmetric eigendecomposition did not converge{where}")
        self.k = k


class TrainingError(TvspcError):
    """Model training failed (e.g. a retained component with zero variance)."""


class ThresholdError(TrainingError):
    """No rank satisfies the explained-variance threshold on every slice."""

    def __init__(self, threshold: float, max_rank: int, worst: list[tuple[int, float]]):
        detail = ", ".join(f"k={k}: {e:.4f}" for k, e in worst)
        super().__init__(
            f"threshold {threshold} unreachable within rank {max_rank}; "
            f"worst slices: {detail}"
        )
        self.threshold = threshold
        self.max_rank = max_rank
        self.worst = worst


class DegreesOfFreedomError(TvspcError):
    """Control-limit degrees of freedom are invalid (requires I > R >= 1)."""


class DimensionMismatchError(TvspcError):
    """Observation width does not match the model's variable count."""


class ModelFormatError(TvspcError):
    """A model file cannot be decoded."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(ModelFormatError):
    """The model file magic/version is not one this reader supports."""


class CorruptModelError(ModelFormatError):
    """The model file decoded but failed invariant re-validation."""
