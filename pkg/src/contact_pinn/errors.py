"""Exception types shared across the package."""


class ContactPinnError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ContactPinnError):
    """Invalid sizes, shapes, ranges or scene settings detected before a run."""


class TapeError(ContactPinnError):
    """Misuse of a gradient tape (e.g. a second backward sweep)."""


class EvaluationError(ContactPinnError):
    """A field evaluation produced an inadmissible state (non-finite value,
    non-positive Jacobian determinant).  Carries the offending sample index
    when one is known."""

    def __init__(self, message, point_index=None):
        super().__init__(message)
        self.point_index = point_index


class NumericalError(ContactPinnError):
    """Training diverged or produced a non-finite loss."""
