"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """Input violates a documented precondition."""


class InvalidSpec(InvalidInput):
    """A scenario specification is internally inconsistent or infeasible."""


class DegenerateInput(InvalidInput):
    """Input too small or too flat for the requested operation."""


class ConvergenceFailure(RuntimeError):
    """An iterative solver ran out of iterations.

    Carries the best residual achieved so callers can decide whether the
    partial answer is usable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EmptyModel(ValueError):
    """All candidate features were eliminated before regression."""


class ParseError(ValueError):
    """A data file could not be parsed; message carries row/column location."""


class PipelineError(RuntimeError):
    """Every candidate fit in a tuning run failed; aggregates the causes."""

    def __init__(self, message, causes=()):
        super().__init__(message)
        self.causes = list(causes)
