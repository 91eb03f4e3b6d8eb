"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """An argument violates a documented precondition."""


class InfeasibleError(ValueError):
    """No solution exists for the requested constraint."""


class WindowCoverageError(ValueError):
    """A tap window or sample grid does not cover the required range."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge.

    Carries the best value and the achieved error estimate.
    """

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class SearchSpaceError(ValueError):
    """Exhaustive detection refused: hypothesis count over the guard."""

    def __init__(self, message, hypothesis_count):
        super().__init__(message)
        self.hypothesis_count = hypothesis_count


class NumericalError(RuntimeError):
    """A numerical factorization or solve failed beyond repair."""
