"""
Monte-Carlo means with standard errors.

Samples are drawn in fixed-size chunks, each from its own sub-stream, and
chunk statistics are merged in chunk order. The estimate therefore depends only
on (seed, samples, chunk_size), whatever the number of worker threads.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from .errors import PreconditionError
from .rng import RngStream

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 1_000_000


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    samples: int

    def within(self, target: float, n_se: float = 3.0) -> bool:
        """True when |mean - target| <= n_se standard errors."""
        return abs(self.mean - target) <= n_se * self.std_error

    def upper(self, n_se: float = 3.0) -> float:
        return self.mean + n_se * self.std_error


def _chunk_stats(sampler: Callable[[RngStream, int], np.ndarray], stream: RngStream,
                 size: int) -> Tuple[int, float, float]:
    values = np.asarray(sampler(stream, size), dtype=float)
    mean = float(values.mean())
    m2 = float(np.sum((values - mean) ** 2))
    return values.size, mean, m2


def _merge(stats: List[Tuple[int, float, float]]) -> Tuple[int, float, float]:
    # pairwise update of count, mean and sum of squared deviations
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mean_b, m2_b in stats:
        total = n + nb
        delta = mean_b - mean
        mean = mean + delta * nb / total
        m2 = m2 + m2_b + delta ** 2 * n * nb / total
        n = total
    return n, mean, m2


def monte_carlo_mean(sampler: Callable[[RngStream, int], np.ndarray], samples: int,
                     stream: RngStream, chunk_size: int = DEFAULT_CHUNK,
                     workers: int = 1) -> MonteCarloEstimate:
    """
    Mean of `samples` draws of sampler(stream, size) with its standard error.

    Args:
        sampler: Returns an array of `size` i.i.d. values drawn from the given stream
        samples: Total number of draws
        stream: Parent stream; chunk i uses stream.spawn(i)
        chunk_size: Draws per chunk
        workers: Thread count (numpy releases the GIL while sampling)
    """
    if samples < 1:
        raise PreconditionError(f"Sample count must be at least 1, got {samples}")
    sizes = [chunk_size] * (samples // chunk_size)
    if samples % chunk_size:
        sizes.append(samples % chunk_size)
    jobs = [(stream.spawn(i), size) for i, size in enumerate(sizes)]

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(lambda job: _chunk_stats(sampler, *job), jobs))
    else:
        stats = [_chunk_stats(sampler, *job) for job in jobs]

    n, mean, m2 = _merge(stats)
    variance = m2 / (n - 1) if n > 1 else 0.0
    std_error = float(np.sqrt(variance / n))
    logger.debug("Monte-Carlo mean %.6g +- %.2g over %d samples", mean, std_error, n)
    return MonteCarloEstimate(mean, std_error, n)


def batch_means(series, batches: int = 20) -> Tuple[float, float]:
    """
    Mean of a correlated series and its batch-means standard error.

    Returns:
        Tuple of (mean, std_error)
    """
    values = np.asarray(series, dtype=float)
    if values.size < 2 * batches:
        raise PreconditionError(f"Need at least {2 * batches} values for {batches} batches, got {values.size}")
    usable = values[: (values.size // batches) * batches]
    block = usable.reshape(batches, -1).mean(axis=1)
    return float(usable.mean()), float(block.std(ddof=1) / np.sqrt(batches))
