"""
Bracketed root finding and unimodal maximisation.

`find_root` is a guaranteed bisection, optionally accelerated by safeguarded
secant steps. Termination is on bracket width only (or an exact zero), so the
accelerated and plain variants return the same root to within `tol`.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from utils.validators import validate_bracket
from .errors import ConvergenceError, NoSignChangeError, NonFiniteError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RootBracket:
    """Interval [lo, hi] with f(lo)*f(hi) <= 0 and an absolute width tolerance."""
    lo: float
    hi: float
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        is_valid, error_message = validate_bracket(self.lo, self.hi, self.tol)
        if not is_valid:
            raise PreconditionError(error_message)

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass
class RootResult:
    """
    Result of root finding.

    Attributes:
        root: The located root.
        iterations: Number of bracket reductions.
        function_calls: Number of function evaluations.
        bracket: Final (lo, hi) interval.
    """
    root: float
    iterations: int
    function_calls: int
    bracket: Tuple[float, float]


def _evaluate(f: Callable[[float], float], x: float) -> float:
    value = float(f(x))
    if not math.isfinite(value):
        raise NonFiniteError(f"Root function returned {value!r} at x={x!r}")
    return value


def solve_bracketed(f: Callable[[float], float], bracket: RootBracket,
                    max_iter: int = DEFAULT_MAX_ITER, accelerate: bool = True) -> RootResult:
    """
    Locate a root of f inside the bracket.

    Args:
        f: Scalar function
        bracket: Interval with a sign change
        max_iter: Iteration budget
        accelerate: Try secant steps before falling back to bisection

    Returns:
        RootResult with the midpoint of the final bracket (or an exact zero)

    Raises:
        NoSignChangeError: f(lo) and f(hi) have the same strict sign
        ConvergenceError: budget exhausted; `last` is the final bracket
    """
    lo, hi, tol = bracket.lo, bracket.hi, bracket.tol
    f_lo = _evaluate(f, lo)
    f_hi = _evaluate(f, hi)
    calls = 2

    if f_lo == 0.0:
        return RootResult(lo, 0, calls, (lo, hi))
    if f_hi == 0.0:
        return RootResult(hi, 0, calls, (lo, hi))
    if f_lo * f_hi > 0:
        raise NoSignChangeError(
            f"No sign change on [{lo!r}, {hi!r}]: f(lo)={f_lo!r}, f(hi)={f_hi!r}",
            lo, hi, f_lo, f_hi,
        )

    use_secant = accelerate
    for iteration in range(1, max_iter + 1):
        width = hi - lo
        if width <= tol:
            return RootResult(0.5 * (lo + hi), iteration - 1, calls, (lo, hi))

        x = 0.5 * (lo + hi)
        if use_secant:
            candidate = hi - f_hi * (hi - lo) / (f_hi - f_lo)
            # keep secant points off the bracket ends
            margin = 0.01 * width
            if lo + margin < candidate < hi - margin:
                x = candidate

        fx = _evaluate(f, x)
        calls += 1
        if fx == 0.0:
            return RootResult(x, iteration, calls, (x, x))

        if f_lo * fx < 0:
            hi, f_hi = x, fx
        else:
            lo, f_lo = x, fx

        # alternate with bisection whenever the secant step failed to halve the bracket
        use_secant = accelerate and (hi - lo) <= 0.5 * width

    raise ConvergenceError(
        f"Root finding did not converge in {max_iter} iterations; last bracket [{lo!r}, {hi!r}]",
        last=(lo, hi),
        iterations=max_iter,
    )


def find_root(f: Callable[[float], float], bracket: RootBracket,
              max_iter: int = DEFAULT_MAX_ITER, accelerate: bool = True) -> float:
    """Root of f inside the bracket; see `solve_bracketed`."""
    result = solve_bracketed(f, bracket, max_iter=max_iter, accelerate=accelerate)
    logger.debug("Root %.15g after %d iterations (%d calls)", result.root, result.iterations,
                 result.function_calls)
    return result.root


def expand_bracket(f: Callable[[float], float], lo: float, hi: float,
                   grow: float = 2.0, max_steps: int = 30,
                   floor: Optional[float] = None) -> Tuple[float, float]:
    """
    Widen [lo, hi] geometrically until f changes sign.

    The lower end is divided by `grow` while it stays above `floor` (for
    positive-only domains); the upper end is multiplied by `grow`.

    Returns:
        A bracket (lo, hi) with f(lo)*f(hi) <= 0

    Raises:
        NoSignChangeError: no sign change within `max_steps` expansions
    """
    f_lo = _evaluate(f, lo)
    f_hi = _evaluate(f, hi)
    for step in range(max_steps + 1):
        if f_lo * f_hi <= 0:
            if step:
                logger.info("Bracket expanded to [%.6g, %.6g] after %d steps", lo, hi, step)
            return lo, hi
        new_lo = lo / grow if lo > 0 else lo - (hi - lo)
        if floor is None or new_lo > floor:
            lo = new_lo
            f_lo = _evaluate(f, lo)
        hi = hi * grow if hi > 0 else hi + (hi - lo)
        f_hi = _evaluate(f, hi)
    raise NoSignChangeError(
        f"No sign change in maximal bracket [{lo!r}, {hi!r}]", lo, hi, f_lo, f_hi
    )


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-10, max_iter: int = DEFAULT_MAX_ITER) -> Tuple[float, float]:
    """
    Maximiser of a unimodal function on [lo, hi] by golden-section search.

    Returns:
        Tuple of (x, f(x)) for the best point evaluated
    """
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = _evaluate(f, c)
    fd = _evaluate(f, d)
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)

    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = _evaluate(f, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = _evaluate(f, d)
        for x, fx in ((c, fc), (d, fd)):
            if fx > best_f:
                best_x, best_f = x, fx

    return best_x, best_f
