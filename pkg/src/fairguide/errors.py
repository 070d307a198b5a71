"""Exception hierarchy shared across the package.

The service layer maps these onto HTTP statuses: conflicts
(IllegalTransition, DuplicateResponse) become 409, everything else
that derives from ValidationError becomes 422.
"""


class FairguideError(Exception):
    """Base class for all package errors."""


class ValidationError(FairguideError):
    """Input rejected: bad schema, bad value, malformed file."""


class CsvError(ValidationError):
    """CSV ingestion failure; carries the offending row number when known."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class StratumShortage(ValidationError):
    """Not enough source rows in a (group, label) cell to build the pool."""


class DimensionMismatch(ValidationError):
    """Feature vector length does not match the model width."""


class EmptyGroupError(ValidationError):
    """A per-group statistic was requested but one group has no members."""


class DegenerateFit(FairguideError):
    """Raised only when a caller explicitly forbids single-class fits."""


class IllegalTransition(FairguideError):
    """Event not legal in the session's current phase."""


class DuplicateResponse(IllegalTransition):
    """A (profile, phase) pair was answered twice."""
