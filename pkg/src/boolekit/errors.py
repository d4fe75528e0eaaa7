"""Exception types shared across the toolkit, with their CLI exit codes."""

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_INCONSISTENT = 4


class BoolekitError(Exception):
    """Base class for all toolkit errors."""

    exit_code = EXIT_VALIDATION


class ValidationError(BoolekitError):
    """Malformed input: labels, ids, tables, geometry or configuration."""

    exit_code = EXIT_VALIDATION


class ShapeError(ValidationError):
    """Structurally mismatched data: wrong coordinate set, bin grid or table shape."""


class DomainError(ValidationError):
    """A value leaves its admissible domain (e.g. a negative implied probability)."""


class EmptyResultError(ValidationError):
    """An operation that must produce records was asked to produce none."""


class CapacityError(BoolekitError):
    """The requested instance exceeds the supported enumeration capacity."""

    exit_code = EXIT_CAPACITY
