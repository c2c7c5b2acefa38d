"""Exception types shared across the package."""


class ProfileSyntaxError(ValueError):
    """Malformed profile expression; ``position`` is a 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position


class ProfileDomainError(ValueError):
    """Profile evaluated outside its domain (or a log/sqrt of a non-positive value)."""


class CouplingDomainError(ValueError):
    """Width profile gives a non-positive coupling."""


class SingularityError(ValueError):
    """The Dyson map coefficients blow up where the width is stationary."""


class DysonOverflowError(OverflowError):
    """Exponent of the Dyson map exceeds the configured norm budget."""


class NotHermitianError(ValueError):
    """A matrix passed to a Hermitian solver is not Hermitian."""


class InsufficientConvergenceError(RuntimeError):
    """Fewer converged eigenvalues than requested."""


class GridTooNarrowError(RuntimeError):
    """Finite-difference box too small even after widening."""
