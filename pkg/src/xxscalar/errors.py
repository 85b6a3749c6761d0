"""Exception hierarchy shared by all modules."""


class XXScalarError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(XXScalarError, ValueError):
    pass


class StateLookupError(XXScalarError, LookupError):
    pass


class LayoutError(XXScalarError, ValueError):
    pass


class ContractViolation(XXScalarError):
    """An operator or state does not satisfy a structural precondition."""


class EncodingError(XXScalarError, ValueError):
    pass


class NormalizationError(EncodingError):
    pass


class DegenerateScaleError(XXScalarError):
    pass


class InfeasibleConstraintsError(XXScalarError):
    def __init__(self, message, rank=None, shape=None):
        super().__init__(message)
        self.rank = rank
        self.shape = shape


class OptimizationError(XXScalarError):
    """Raised when the angle search misses tolerance; ``best`` holds the best result seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(XXScalarError, ValueError):
    pass
