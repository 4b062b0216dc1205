"""
Seeded, splittable random streams.

Every stochastic operation takes an `RngStream`. Streams wrap numpy's
counter-based Philox bit generator keyed by a `SeedSequence`, so the same seed
and spawn path reproduce the same draws on any platform, and sub-streams for
workers or chunks are derived by index.
"""

from typing import Optional, Tuple

import numpy as np

from utils.validators import validate_probability, validate_seed
from .errors import PreconditionError


class RngStream:
    """Deterministic random source identified by (seed, spawn key)."""

    def __init__(self, seed: int, key: Tuple[int, ...] = ()):
        is_valid, error_message = validate_seed(seed)
        if not is_valid:
            raise PreconditionError(error_message)
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def spawn(self, index: int) -> "RngStream":
        """Independent sub-stream; depends only on (seed, key, index), not on draws made so far."""
        if index < 0:
            raise PreconditionError(f"Sub-stream index must be non-negative, got {index}")
        return RngStream(self.seed, self.key + (index,))

    def normal(self, size=None):
        return self._generator.standard_normal(size)

    def uniform(self, size=None):
        return self._generator.random(size)

    def binomial(self, n, q, size=None):
        if np.any(np.asarray(n) < 0):
            raise PreconditionError(f"Binomial count must be non-negative, got {n}")
        is_valid, error_message = validate_probability(q)
        if not is_valid:
            raise PreconditionError(error_message)
        return self._generator.binomial(n, q, size)

    def integers(self, n: int, size=None):
        """Uniform draws from {0, ..., n-1}."""
        if n < 1:
            raise PreconditionError(f"Index range must be positive, got {n}")
        return self._generator.integers(0, n, size)

    def hypergeometric(self, ngood, nbad, nsample, size=None):
        return self._generator.hypergeometric(ngood, nbad, nsample, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def choice_without_replacement(self, population: np.ndarray, k: int) -> np.ndarray:
        return self._generator.choice(population, size=k, replace=False)


def gaussian(stream: RngStream) -> float:
    """One standard normal draw."""
    return float(stream.normal())


def binomial(stream: RngStream, n: int, q: float) -> int:
    """One Binomial(n, q) draw."""
    return int(stream.binomial(n, q))


def uniform_index(stream: RngStream, n: int) -> int:
    """One uniform draw from {0, ..., n-1}."""
    return int(stream.integers(n))


def stream_from_seed(seed: Optional[int]) -> RngStream:
    """Stream for a user-supplied seed; a missing seed is a precondition error."""
    if seed is None:
        raise PreconditionError("This operation is stochastic and requires an explicit --seed")
    return RngStream(seed)
