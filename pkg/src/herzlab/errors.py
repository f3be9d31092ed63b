"""Exception hierarchy shared by all herzlab modules.

The CLI maps these onto exit codes: input/data problems -> 2,
parameter/admissibility/resolution problems -> 3, violated internal
invariants -> 4.
"""


class HerzLabError(Exception):
    """Base class for all herzlab errors."""


class DataError(HerzLabError):
    """Malformed or non-finite input data (exit code 2)."""


class EmptySupportError(DataError):
    """Operation requires a nonempty coefficient field."""


class DegenerateInputError(DataError):
    """Input is valid but degenerate for the requested operation (e.g. zero source norm)."""


class DimensionError(HerzLabError):
    """Unsupported or mismatched spatial dimension (exit code 3)."""


class InadmissibleParameterError(HerzLabError):
    """Quasi-norm parameters violate an admissibility hypothesis (exit code 3)."""


class WindowError(HerzLabError):
    """Truncation window is inconsistent or too small for the data (exit code 3)."""


class ResolutionError(HerzLabError):
    """Grid resolution too coarse for the requested level or band (exit code 3)."""


class PeriodizationError(DataError):
    """Grid data does not decay at the box boundary; circular convolutions would wrap."""


class ConstructionError(HerzLabError):
    """A constructed object failed its own verification (exit code 4)."""


class InternalInvariantError(HerzLabError):
    """An internal consistency check failed (exit code 4)."""
