"""Exception hierarchy shared by all modules."""


class RegwalksError(Exception):
    """Base class for library errors."""


class InvalidParametersError(RegwalksError, ValueError):
    pass


class GenerationError(RegwalksError, RuntimeError):
    """The sampler exhausted its retry budget."""


class GraphParseError(RegwalksError, ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class GraphInvariantError(RegwalksError, ValueError):
    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


class BudgetExceededError(RegwalksError, ValueError):
    """A brute-force or dense computation would exceed its size budget."""


class DomainError(RegwalksError, ValueError):
    pass


class SpectralError(RegwalksError, RuntimeError):
    """Eigensolver failure or missing trivial eigenvalue."""


class QuadratureError(RegwalksError, RuntimeError):
    pass


class AccumulatorError(RegwalksError, ValueError):
    """Empty accumulator, metadata mismatch, or too few trials."""


class ConfigError(RegwalksError, ValueError):
    pass
