"""
Exception hierarchy shared by every rbm-phase module.

Precondition errors mean the caller asked for something outside the supported
parameter range (CLI exit code 1). Numerical errors mean the computation itself
failed: no bracket, no convergence, overflow (CLI exit code 2).
"""

from typing import Any, Optional


class RbmPhaseError(Exception):
    """Base class for all rbm-phase errors."""


class ConfigError(RbmPhaseError):
    """Configuration file missing or malformed."""


class PreconditionError(RbmPhaseError, ValueError):
    """Parameters violate an operation's preconditions."""


class SupercriticalError(PreconditionError):
    """Asymmetric branch requested at or above the critical diffusion."""


class NearCriticalError(PreconditionError):
    """Requested diffusion is too close to the critical value to solve reliably."""


class NumericalError(RbmPhaseError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy value."""


class NoSignChangeError(NumericalError):
    """Root bracket does not straddle a sign change."""

    def __init__(self, message: str, lo: float, hi: float, f_lo: float, f_hi: float):
        super().__init__(message)
        self.lo = lo
        self.hi = hi
        self.f_lo = f_lo
        self.f_hi = f_hi


class ConvergenceError(NumericalError):
    """Iteration budget exhausted. `last` carries the final iterate or bracket."""

    def __init__(self, message: str, last: Optional[Any] = None, iterations: int = 0):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class NonFiniteError(NumericalError):
    """A NaN or infinity appeared where a finite value is required."""


class NonStochasticError(NumericalError):
    """A transition matrix row does not sum to one."""


class RateRangeError(NumericalError):
    """A transition probability fell outside [0, 1]."""


class VanishingMassError(NumericalError):
    """A density normalisation underflowed."""
