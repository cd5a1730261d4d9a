"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An input violates a documented precondition."""


class DomainError(PreconditionError):
    """A special function was called outside its supported domain."""


class EvaluationError(FloatingPointError):
    """A user-supplied function returned non-finite values."""


class ConvergenceError(RuntimeError):
    """A numerical procedure ran out of budget before meeting its tolerance.

    The best value reached so far is kept on ``partial`` together with the
    last error estimate, so callers can still report something.
    """

    def __init__(self, message, partial=None, error=None):
        super().__init__(message)
        self.partial = partial
        self.error = error


class NotAMemberError(PreconditionError):
    """Raised when an S-transform is requested for a non-Hida specification."""

    def __init__(self, message, verdict):
        super().__init__(message)
        self.verdict = verdict
