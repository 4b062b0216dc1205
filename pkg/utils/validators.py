"""
Input validators for model parameters.
Validates spin counts, batch sizes, temperatures, diffusions, seeds, etc.
"""

import math
import numbers
from typing import Optional, Tuple

import numpy as np

MAX_SEED = 2 ** 64
SCHEMES = ("full", "rb", "mean_field_rb", "effective")
BRANCHES = ("zero", "plus", "minus")


def _is_number(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool) and math.isfinite(value)


def validate_spin_count(N) -> Tuple[bool, str]:
    """
    Validate the number of spins or particles.

    Args:
        N: Spin count

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(N, numbers.Integral) or isinstance(N, bool):
        return False, f"N must be an integer, got {N!r}"

    if N < 2:
        return False, f"N must be at least 2, got {N}"

    return True, ""


def validate_batch_size(N: int, p: Optional[int], require_divides: bool = False) -> Tuple[bool, str]:
    """
    Validate a random-batch size against the population size.

    Args:
        N: Population size
        p: Batch size (None means no batching)
        require_divides: Also require p to divide N

    Returns:
        Tuple of (is_valid, error_message)
    """
    if p is None:
        return True, ""  # Classical model

    if not isinstance(p, numbers.Integral) or isinstance(p, bool):
        return False, f"p must be an integer, got {p!r}"

    if p < 2 or p > N:
        return False, f"p must be between 2 and N={N}, got {p}"

    if require_divides and N % p != 0:
        return False, f"p={p} must divide N={N}"

    return True, ""


def validate_beta(beta, allow_zero: bool = False) -> Tuple[bool, str]:
    """
    Validate an inverse temperature.

    Args:
        beta: Inverse temperature
        allow_zero: Accept beta = 0 (infinite temperature)

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not _is_number(beta):
        return False, f"beta must be a finite number, got {beta!r}"

    if beta < 0 or (beta == 0 and not allow_zero):
        return False, f"beta must be positive, got {beta}"

    return True, ""


def validate_positive(value, field_name: str, allow_zero: bool = False) -> Tuple[bool, str]:
    """
    Validate that a real parameter is positive.

    Args:
        value: Parameter value
        field_name: Name used in the error message
        allow_zero: Accept exactly zero

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not _is_number(value):
        return False, f"{field_name} must be a finite number, got {value!r}"

    if value < 0 or (value == 0 and not allow_zero):
        return False, f"{field_name} must be positive, got {value}"

    return True, ""


def validate_magnetization(m) -> Tuple[bool, str]:
    """Validate that a magnetization lies in [-1, 1]."""
    if not _is_number(m):
        return False, f"m must be a finite number, got {m!r}"

    if m < -1.0 or m > 1.0:
        return False, f"m must lie in [-1, 1], got {m}"

    return True, ""


def validate_probability(q) -> Tuple[bool, str]:
    """Validate a probability parameter (scalar or array)."""
    try:
        values = np.asarray(q, dtype=float)
    except (TypeError, ValueError):
        return False, f"q must be numeric, got {q!r}"

    if values.size == 0 or not (np.all(values >= 0.0) and np.all(values <= 1.0)):
        return False, f"q must lie in [0, 1], got {q!r}"

    return True, ""


def validate_seed(seed) -> Tuple[bool, str]:
    """
    Validate a random seed (64-bit unsigned integer).

    Args:
        seed: Seed value

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(seed, numbers.Integral) or isinstance(seed, bool):
        return False, f"seed must be an integer, got {seed!r}"

    if seed < 0 or seed >= MAX_SEED:
        return False, f"seed must be a 64-bit unsigned integer, got {seed}"

    return True, ""


def validate_bracket(lo, hi, tol) -> Tuple[bool, str]:
    """Validate a root bracket: lo < hi and tol > 0."""
    if not (_is_number(lo) and _is_number(hi)):
        return False, f"Bracket ends must be finite numbers, got [{lo!r}, {hi!r}]"

    if not lo < hi:
        return False, f"Bracket must satisfy lo < hi, got [{lo}, {hi}]"

    if not (_is_number(tol) and tol > 0):
        return False, f"Bracket tolerance must be positive, got {tol!r}"

    return True, ""


def validate_quadrature_rule(half_width, panels, points) -> Tuple[bool, str]:
    """Validate a composite Gauss-Legendre rule."""
    if half_width is not None and not (_is_number(half_width) and half_width > 0):
        return False, f"Quadrature half-width must be positive, got {half_width!r}"

    if not isinstance(panels, int) or not isinstance(points, int) or panels < 1 or points < 1:
        return False, f"Quadrature panels and points must be positive integers, got {panels!r}, {points!r}"

    if panels * points < 16:
        return False, f"Quadrature needs at least 16 nodes, got {panels * points}"

    return True, ""


def validate_scheme(scheme: str) -> Tuple[bool, str]:
    """Validate a particle scheme tag."""
    if scheme not in SCHEMES:
        return False, f"Unknown scheme {scheme!r}; choose one of {', '.join(SCHEMES)}"

    return True, ""


def validate_branch(branch: str) -> Tuple[bool, str]:
    """Validate a stationary branch label."""
    if branch not in BRANCHES:
        return False, f"Unknown branch {branch!r}; choose one of {', '.join(BRANCHES)}"

    return True, ""

