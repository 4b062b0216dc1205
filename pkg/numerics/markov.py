"""
Power iteration for the invariant law of a finite Markov chain.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from .errors import ConvergenceError, NonStochasticError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-9
DEFAULT_MAX_ITER = 10_000_000
ROW_SUM_TOL = 1e-10


@dataclass
class PowerIterationResult:
    """Fixed distribution of v -> vM with the iteration count and final L1 step."""
    distribution: np.ndarray
    iterations: int
    l1_change: float


def check_stochastic(matrix: np.ndarray, tol: float = ROW_SUM_TOL) -> None:
    """Raise NonStochasticError naming the first row whose sum is off by more than tol."""
    row_sums = np.asarray(matrix.sum(axis=1)).ravel()
    bad = np.abs(row_sums - 1.0) > tol
    if np.any(bad):
        row = int(np.argmax(bad))
        raise NonStochasticError(f"Row {row} sums to {row_sums[row]!r}, not 1")
    if np.any(np.asarray(matrix.min()) < 0):
        raise NonStochasticError("Transition matrix has negative entries")


def power_iterate(matrix, v0: np.ndarray, eps: float = DEFAULT_EPS,
                  max_iter: int = DEFAULT_MAX_ITER, scale: Optional[float] = None) -> PowerIterationResult:
    """
    Iterate v <- vM until consecutive iterates are closer than scale*eps in L1.

    Args:
        matrix: Row-stochastic square matrix (dense array or object with `.matrix`)
        v0: Initial probability vector
        eps: Per-state tolerance
        max_iter: Iteration budget
        scale: Threshold multiplier; defaults to the number of states minus one
            (the spin count N for a magnetization chain)

    Returns:
        PowerIterationResult with the normalised fixed distribution

    Raises:
        NonStochasticError: a row does not sum to 1
        ConvergenceError: budget exhausted; `last` carries the final iterate
    """
    dense = np.asarray(getattr(matrix, "matrix", matrix), dtype=float)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise PreconditionError(f"Transition matrix must be square, got shape {dense.shape}")
    check_stochastic(dense)

    v = np.asarray(v0, dtype=float).copy()
    if v.shape != (dense.shape[0],):
        raise PreconditionError(f"Initial vector has shape {v.shape}, expected ({dense.shape[0]},)")
    if np.any(v < 0) or abs(v.sum() - 1.0) > ROW_SUM_TOL:
        raise PreconditionError("Initial vector must be a probability distribution")

    if scale is None:
        scale = max(dense.shape[0] - 1, 1)
    threshold = scale * eps

    # v M computed as M^T v on a sparse copy; chains here are banded
    transposed = sparse.csr_matrix(dense.T)
    change = np.inf
    for iteration in range(1, max_iter + 1):
        v_next = transposed @ v
        change = float(np.abs(v_next - v).sum())
        v = v_next
        if change < threshold:
            v = v / v.sum()
            logger.info("Power iteration converged after %d iterations (L1 step %.3e)", iteration, change)
            return PowerIterationResult(v, iteration, change)

    raise ConvergenceError(
        f"Power iteration did not converge in {max_iter} iterations (last L1 step {change:.3e})",
        last=v / v.sum(),
        iterations=max_iter,
    )
