"""Exception hierarchy shared by all solver modules."""


class QLMError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QLMError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NonConvergence(QLMError, RuntimeError):
    """An iterative or adaptive procedure failed to reach its tolerance."""


class NonFiniteSample(NonConvergence):
    """An integrand returned inf or nan."""


class NonFinite(NonConvergence):
    """A QLM iterate overflowed or produced nan (usually a bad guess)."""


class NoSignChange(QLMError, ValueError):
    """Root bracket endpoints do not straddle a sign change."""


class NoBoundState(QLMError):
    """The potential admits no bound state in the searched range."""


class ExtrapolationError(QLMError, ValueError):
    """Requested radius lies outside the range covered by a solution."""


class MaxIterExceeded(NonConvergence):
    """QLM iteration budget exhausted; ``history`` holds the partial records."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])
