"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation's documented precondition does not hold for the input."""

    def __init__(self, message, witnesses=None):
        super().__init__(message)
        self.witnesses = witnesses if witnesses is not None else []


class SpanDeficiencyError(PreconditionError):
    """A direction set does not span the ambient space."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge within its budget."""
