"""Exception types shared across the package."""


class LYZError(Exception):
    """Base class for errors raised by lyzeros."""


class InvalidArgumentError(LYZError, ValueError):
    """An argument is outside its documented domain."""


class TruncationError(LYZError, ArithmeticError):
    """Probability mass leaks past the truncated Fock space.

    Raise ``n_max`` (or ``n_max_evolve``) and retry.
    """


class ConvergenceError(LYZError, ArithmeticError):
    """An iterative solver did not converge."""
