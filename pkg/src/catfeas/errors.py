"""Exception hierarchy.

Every error carries a short ``kind`` slug so the command line front end can
emit a single machine-parsable line.
"""


class CatFeasError(Exception):
    kind = "error"


class PointOutsideCapError(CatFeasError, ValueError):
    kind = "point-outside-cap"


class NotUnitVectorError(CatFeasError, ValueError):
    kind = "not-unit-vector"


class ParameterOutOfRangeError(CatFeasError, ValueError):
    kind = "parameter-out-of-range"


class DegenerateSideError(CatFeasError, ValueError):
    kind = "degenerate-side"


class EmptyGeneratorListError(CatFeasError, ValueError):
    kind = "empty-generator-list"


class NotInSetError(CatFeasError, ValueError):
    kind = "not-in-set"


class EmptyIntersectionError(CatFeasError, RuntimeError):
    kind = "empty-intersection-detected"


class MissingCMError(CatFeasError, ValueError):
    kind = "missing-c-m"


class InsufficientValidSamplesError(CatFeasError, RuntimeError):
    kind = "insufficient-valid-samples"


class TraceTooShortError(CatFeasError, RuntimeError):
    kind = "trace-too-short"


class MissingIntersectionDistancesError(CatFeasError, ValueError):
    kind = "missing-intersection-distances"


class RegularityConstantError(CatFeasError, ValueError):
    kind = "k-below-sqrt-cm"


class EmptyTailError(CatFeasError, ValueError):
    kind = "empty-tail"


class InfeasibleOverlapError(CatFeasError, ValueError):
    kind = "infeasible-overlap"


class InvariantViolationError(CatFeasError, ValueError):
    kind = "invariant-violation"


class ConfigError(CatFeasError, ValueError):
    """Invalid problem configuration; ``field`` names the offending entry."""

    kind = "config"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InvalidCapError(CatFeasError, ValueError):
    kind = "invalid-cap"
