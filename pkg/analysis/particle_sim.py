"""
Time-discretised interacting particle systems in one dimension.

Schemes:
    full           X <- X - delta grad U(X) - delta/(N-1) sum_{j != i} grad W(X_i - X_j) + sqrt(2 sigma delta) G
    rb             same, interacting only inside the blocks of a fresh uniform partition of size-p batches
    mean_field_rb  each particle draws p-1 companions with replacement from the current cloud
    effective      Euler-Maruyama of the effective SDE with diffusion (2 sigma + delta/(p-1) Sigma)^(1/2),
                   Sigma = (grad W)^2 * rho - (grad W * rho)^2 against the empirical law

"Force" below means the interaction term alone: the average of grad W(x_i - x_j)
over the particle's companions.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from numerics import NonFiniteError, PreconditionError, RngStream, batch_means
from utils.validators import (
    validate_batch_size,
    validate_positive,
    validate_scheme,
    validate_spin_count,
)

logger = logging.getLogger(__name__)

DT_INNER_FRACTION = 0.1
SIGMA_FLOOR = -1e-12
_PAIR_CHUNK = 512
_TEST_POINTS = np.array([-3.0, -1.0, -0.25, 0.0, 0.5, 2.0, 7.0])


@dataclass(frozen=True)
class PotentialPair:
    """Confinement gradient grad U and interaction gradient grad W, vectorised."""
    grad_U: Callable[[np.ndarray], np.ndarray]
    grad_W: Callable[[np.ndarray], np.ndarray]
    grad_W_squared: Callable[[np.ndarray], np.ndarray]
    is_quadratic_W: bool = False
    L_W: Optional[float] = None

    def __post_init__(self):
        if self.is_quadratic_W:
            is_valid, error_message = validate_positive(self.L_W, "L_W")
            if not is_valid:
                raise PreconditionError(error_message)
            x = _TEST_POINTS
            if not (np.allclose(self.grad_W(x), self.L_W * x, rtol=1e-12, atol=1e-12)
                    and np.allclose(self.grad_W_squared(x), (self.L_W * x) ** 2, rtol=1e-12, atol=1e-12)):
                raise PreconditionError("Potentials flagged quadratic do not satisfy grad W(x) = L_W x")


def double_well(L_W: float) -> PotentialPair:
    """U(x) = x^4/4 - x^2/2, W(x) = L_W x^2/2."""
    return PotentialPair(
        grad_U=lambda x: x ** 3 - x,
        grad_W=lambda x: L_W * x,
        grad_W_squared=lambda x: (L_W * x) ** 2,
        is_quadratic_W=True,
        L_W=L_W,
    )


def generic_potentials(grad_U: Callable[[np.ndarray], np.ndarray],
                       grad_W: Callable[[np.ndarray], np.ndarray]) -> PotentialPair:
    """Potentials without the quadratic fast path."""
    return PotentialPair(grad_U=grad_U, grad_W=grad_W, grad_W_squared=lambda x: grad_W(x) ** 2)


@dataclass(frozen=True)
class SimConfig:
    """
    Scheme parameters.

    sigma = 0 and delta = 0 are accepted for deterministic checks; the discrete
    schemes still need delta > 0 and the effective dynamics a positive dt_inner.
    """
    N: int
    delta: float
    p: int
    sigma: float
    potentials: PotentialPair
    dt_inner: Optional[float] = None

    def __post_init__(self):
        for is_valid, error_message in (
            validate_spin_count(self.N),
            validate_batch_size(self.N, self.p),
            validate_positive(self.delta, "delta", allow_zero=True),
            validate_positive(self.sigma, "sigma", allow_zero=True),
        ):
            if not is_valid:
                raise PreconditionError(error_message)
        if self.dt_inner is None:
            object.__setattr__(self, "dt_inner", DT_INNER_FRACTION * self.delta)
        is_valid, error_message = validate_positive(self.dt_inner, "dt_inner", allow_zero=True)
        if not is_valid:
            raise PreconditionError(error_message)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "delta": self.delta,
            "p": self.p,
            "sigma": self.sigma,
            "L_W": self.potentials.L_W,
            "dt_inner": self.dt_inner,
        }


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """Particle positions with their mean and (population) variance."""
    positions: np.ndarray
    mean: float = field(init=False)
    variance: float = field(init=False)

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise PreconditionError("Ensemble positions must be a non-empty 1-d sequence")
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "mean", float(x.mean()))
        object.__setattr__(self, "variance", float(x.var()))

    @property
    def N(self) -> int:
        return self.positions.size


@dataclass(frozen=True, eq=False)
class BatchPartition:
    """Permutation of 0..N-1 cut into consecutive blocks of size p."""
    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.asarray(self.blocks)
        if blocks.ndim != 2:
            raise PreconditionError("Partition blocks must form a 2-d array")
        flat = np.sort(blocks.ravel())
        if not np.array_equal(flat, np.arange(flat.size)):
            raise PreconditionError("Partition must contain every index exactly once")

    @property
    def p(self) -> int:
        return self.blocks.shape[1]

    @property
    def N(self) -> int:
        return self.blocks.size

    def canonical(self) -> Tuple[Tuple[int, ...], ...]:
        """Order-free representation, for counting distinct partitions."""
        return tuple(sorted(tuple(sorted(int(i) for i in block)) for block in self.blocks))


def sample_partition(N: int, p: int, stream: RngStream) -> BatchPartition:
    """Uniform random partition into N/p batches: shuffle, then chunk."""
    is_valid, error_message = validate_batch_size(N, p, require_divides=True)
    if not is_valid:
        raise PreconditionError(error_message)
    return BatchPartition(stream.permutation(N).reshape(N // p, p))


def _pairwise_mean(x: np.ndarray, func: Callable[[np.ndarray], np.ndarray],
                   exclude_self: bool) -> np.ndarray:
    # mean over j of func(x_i - x_j), chunked over i; O(N^2) work
    N = x.size
    out = np.empty(N)
    self_term = float(np.asarray(func(np.zeros(1)))[0])
    for start in range(0, N, _PAIR_CHUNK):
        rows = x[start:start + _PAIR_CHUNK]
        total = func(rows[:, None] - x[None, :]).sum(axis=1)
        out[start:start + _PAIR_CHUNK] = (total - self_term) / (N - 1) if exclude_self else total / N
    return out


def full_force(ens: ParticleEnsemble, potentials: PotentialPair, naive: bool = False) -> np.ndarray:
    """(1/(N-1)) sum_{j != i} grad W(x_i - x_j); O(N) for quadratic W unless naive."""
    x = ens.positions
    if potentials.is_quadratic_W and not naive:
        mean_others = (x.sum() - x) / (ens.N - 1)
        return potentials.L_W * (x - mean_others)
    return _pairwise_mean(x, potentials.grad_W, exclude_self=True)


def batch_force(ens: ParticleEnsemble, partition: BatchPartition, potentials: PotentialPair,
                naive: bool = False) -> np.ndarray:
    """(1/(p-1)) sum over the other members of i's block of grad W(x_i - x_j); O(Np)."""
    x = ens.positions
    p = partition.p
    blocks = x[partition.blocks]
    if potentials.is_quadratic_W and not naive:
        mean_others = (blocks.sum(axis=1, keepdims=True) - blocks) / (p - 1)
        block_force = potentials.L_W * (blocks - mean_others)
    else:
        self_term = float(np.asarray(potentials.grad_W(np.zeros(1)))[0])
        diffs = blocks[:, :, None] - blocks[:, None, :]
        block_force = (potentials.grad_W(diffs).sum(axis=2) - self_term) / (p - 1)
    force = np.empty_like(x)
    force[partition.blocks] = block_force
    return force


def mean_field_batch_force(ens: ParticleEnsemble, companions: np.ndarray,
                           potentials: PotentialPair) -> np.ndarray:
    """Average of grad W(x_i - x_j) over companion indices drawn with replacement (shape (N, p-1))."""
    x = ens.positions
    if potentials.is_quadratic_W:
        return potentials.L_W * (x - x[companions].mean(axis=1))
    return potentials.grad_W(x[:, None] - x[companions]).mean(axis=1)


def law_force(ens: ParticleEnsemble, potentials: PotentialPair) -> np.ndarray:
    """grad W * rho_N at each particle, against the empirical law (self included)."""
    x = ens.positions
    if potentials.is_quadratic_W:
        return potentials.L_W * (x - ens.mean)
    return _pairwise_mean(x, potentials.grad_W, exclude_self=False)


def force_variance(ens: ParticleEnsemble, potentials: PotentialPair):
    """
    Sigma(x_i, rho_N) = (grad W)^2 * rho_N - (grad W * rho_N)^2.

    Returns:
        L_W^2 Var(ens) (a scalar) for quadratic W, else one value per particle
    """
    if potentials.is_quadratic_W:
        return potentials.L_W ** 2 * ens.variance
    x = ens.positions
    second = _pairwise_mean(x, potentials.grad_W_squared, exclude_self=False)
    first = _pairwise_mean(x, potentials.grad_W, exclude_self=False)
    return second - first ** 2


def batch_force_variance(ens: ParticleEnsemble, p: int, L_W: float) -> np.ndarray:
    """
    Exact variance of each particle's batch force over uniform partitions (quadratic W).

    The p-1 batch mates are drawn without replacement from the other N-1
    particles, so Var = L_W^2 s_i^2/(p-1) * (N-p)/(N-2), with s_i^2 the
    population variance of the others. Its large-N limit is L_W^2 Var/(p-1).
    """
    x = ens.positions
    N = ens.N
    if p >= N:
        return np.zeros(N)
    n = N - 1
    mean_others = (x.sum() - x) / n
    var_others = ((x ** 2).sum() - x ** 2) / n - mean_others ** 2
    return L_W ** 2 * np.maximum(var_others, 0.0) / (p - 1) * (N - p) / (N - 2)


def _advance(x: np.ndarray, drift: np.ndarray, step: float, noise_scale, noise: np.ndarray,
             what: str) -> ParticleEnsemble:
    new = x + step * drift + noise_scale * noise
    if not np.all(np.isfinite(new)):
        raise NonFiniteError(f"Non-finite particle position after a step with {what}; reduce the step size")
    return ParticleEnsemble(new)


def _noise(stream: RngStream, N: int, noise: Optional[np.ndarray]) -> np.ndarray:
    if noise is None:
        return stream.normal(N)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (N,):
        raise PreconditionError(f"Noise must have shape ({N},), got {noise.shape}")
    return noise


def _require_delta(cfg: SimConfig) -> None:
    if not cfg.delta > 0:
        raise PreconditionError(f"Discrete schemes need delta > 0, got {cfg.delta}")


def step_full(ens: ParticleEnsemble, cfg: SimConfig, stream: RngStream,
              noise: Optional[np.ndarray] = None, naive: bool = False) -> ParticleEnsemble:
    """One Euler-Maruyama step with all pairwise interactions."""
    _require_delta(cfg)
    x = ens.positions
    drift = -cfg.potentials.grad_U(x) - full_force(ens, cfg.potentials, naive=naive)
    g = _noise(stream, ens.N, noise)
    return _advance(x, drift, cfg.delta, np.sqrt(2.0 * cfg.sigma * cfg.delta), g, f"delta={cfg.delta!r}")


def step_rb(ens: ParticleEnsemble, cfg: SimConfig, stream: RngStream,
            partition: Optional[BatchPartition] = None, noise: Optional[np.ndarray] = None,
            naive: bool = False) -> ParticleEnsemble:
    """One random-batch step: fresh partition, then within-batch interactions only."""
    _require_delta(cfg)
    if partition is None:
        partition = sample_partition(ens.N, cfg.p, stream)
    elif partition.N != ens.N:
        raise PreconditionError(f"Partition covers {partition.N} indices, ensemble has {ens.N}")
    x = ens.positions
    drift = -cfg.potentials.grad_U(x) - batch_force(ens, partition, cfg.potentials, naive=naive)
    g = _noise(stream, ens.N, noise)
    return _advance(x, drift, cfg.delta, np.sqrt(2.0 * cfg.sigma * cfg.delta), g, f"delta={cfg.delta!r}")


def step_mean_field_rb(ens: ParticleEnsemble, cfg: SimConfig, stream: RngStream,
                       noise: Optional[np.ndarray] = None) -> ParticleEnsemble:
    """
    One step where each particle interacts with p-1 companions drawn with replacement.

    Self-draws are allowed; their probability (p-1)/N gives an O(1/N) bias.
    """
    _require_delta(cfg)
    if ens.N < cfg.p:
        raise PreconditionError(f"Need N >= p, got N={ens.N}, p={cfg.p}")
    x = ens.positions
    companions = stream.integers(ens.N, size=(ens.N, cfg.p - 1))
    drift = -cfg.potentials.grad_U(x) - mean_field_batch_force(ens, companions, cfg.potentials)
    g = _noise(stream, ens.N, noise)
    return _advance(x, drift, cfg.delta, np.sqrt(2.0 * cfg.sigma * cfg.delta), g, f"delta={cfg.delta!r}")


def effective_diffusion(ens: ParticleEnsemble, cfg: SimConfig):
    """(2 sigma + delta/(p-1) Sigma)^(1/2), scalar for quadratic W."""
    sigma_force = force_variance(ens, cfg.potentials)
    if np.any(np.asarray(sigma_force) < SIGMA_FLOOR):
        raise NonFiniteError(f"Negative force variance {np.min(sigma_force)!r}")
    sigma_force = np.maximum(sigma_force, 0.0)
    return np.sqrt(2.0 * cfg.sigma + cfg.delta / (cfg.p - 1) * sigma_force)


def step_effective(ens: ParticleEnsemble, cfg: SimConfig, stream: RngStream,
                   noise: Optional[np.ndarray] = None) -> ParticleEnsemble:
    """
    One Euler-Maruyama step of the effective dynamics with step dt_inner.

    delta only enters the diffusion; dt_inner is the integrator step.
    """
    if not cfg.dt_inner > 0:
        raise PreconditionError(f"Effective dynamics needs dt_inner > 0, got {cfg.dt_inner}")
    x = ens.positions
    h = cfg.dt_inner
    drift = -cfg.potentials.grad_U(x) - law_force(ens, cfg.potentials)
    diffusion = effective_diffusion(ens, cfg)
    g = _noise(stream, ens.N, noise)
    return _advance(x, drift, h, np.sqrt(h) * diffusion, g, f"dt_inner={h!r}")


@dataclass(frozen=True)
class InitSpec:
    """
    Initial law: point mass at loc, Gaussian(loc, scale^2), or the two-point
    mixture weight*delta_{+loc} + (1-weight)*delta_{-loc}.
    """
    kind: str
    loc: float = 0.0
    scale: float = 0.0
    weight: float = 0.5

    KINDS = ("point", "gaussian", "two-point")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise PreconditionError(f"Unknown init kind {self.kind!r}; choose one of {', '.join(self.KINDS)}")
        if self.scale < 0 or not 0.0 <= self.weight <= 1.0:
            raise PreconditionError(f"Invalid init parameters scale={self.scale}, weight={self.weight}")

    @classmethod
    def parse(cls, text: str) -> "InitSpec":
        """Parse "point:1.0", "gaussian:0,0.5" or "two-point:1[,weight]"."""
        kind, _, args = text.partition(":")
        try:
            values = [float(v) for v in args.split(",") if v.strip()]
        except ValueError:
            raise PreconditionError(f"Cannot parse init spec {text!r}")
        kind = kind.strip()
        if kind == "point" and len(values) == 1:
            return cls(kind, loc=values[0])
        if kind == "gaussian" and len(values) == 2:
            return cls(kind, loc=values[0], scale=values[1])
        if kind == "two-point" and len(values) in (1, 2):
            return cls(kind, loc=values[0], weight=values[1] if len(values) == 2 else 0.5)
        raise PreconditionError(f"Cannot parse init spec {text!r}; expected point:x, gaussian:mu,s or two-point:a[,w]")

    def sample(self, N: int, stream: RngStream) -> ParticleEnsemble:
        if self.kind == "point":
            return ParticleEnsemble(np.full(N, self.loc))
        if self.kind == "gaussian":
            return ParticleEnsemble(self.loc + self.scale * stream.normal(N))
        signs = np.where(stream.uniform(N) < self.weight, 1.0, -1.0)
        return ParticleEnsemble(self.loc * signs)

    def to_text(self) -> str:
        if self.kind == "point":
            return f"point:{self.loc!r}"
        if self.kind == "gaussian":
            return f"gaussian:{self.loc!r},{self.scale!r}"
        return f"two-point:{self.loc!r},{self.weight!r}"


STEPPERS = {
    "full": step_full,
    "rb": step_rb,
    "mean_field_rb": step_mean_field_rb,
    "effective": step_effective,
}


def run(scheme: str, cfg: SimConfig, steps: int, init: InitSpec, stream: RngStream,
        record_every: int = 1, progress: bool = False) -> pd.DataFrame:
    """
    Simulate a scheme and record summary statistics.

    The initial ensemble is drawn from sub-stream 0 and the dynamics from
    sub-stream 1. Time is steps * delta for the discrete schemes and
    steps * dt_inner for the effective dynamics.

    Returns:
        DataFrame with columns step, time, mean, variance, diffusion_coefficient
    """
    is_valid, error_message = validate_scheme(scheme)
    if not is_valid:
        raise PreconditionError(error_message)
    if steps < 0 or record_every < 1:
        raise PreconditionError(f"Need steps >= 0 and record_every >= 1, got {steps}, {record_every}")
    if scheme == "rb" and cfg.N % cfg.p:
        raise PreconditionError(f"p={cfg.p} must divide N={cfg.N}")

    stepper = STEPPERS[scheme]
    step_size = cfg.dt_inner if scheme == "effective" else cfg.delta
    ens = init.sample(cfg.N, stream.spawn(0))
    dynamics = stream.spawn(1)

    def diffusion(current: ParticleEnsemble) -> float:
        if scheme == "effective":
            return float(np.mean(effective_diffusion(current, cfg)))
        return float(np.sqrt(2.0 * cfg.sigma))

    rows = [(0, 0.0, ens.mean, ens.variance, diffusion(ens))]
    for n in tqdm(range(1, steps + 1), desc=scheme, disable=not progress):
        ens = stepper(ens, cfg, dynamics)
        if n % record_every == 0:
            rows.append((n, n * step_size, ens.mean, ens.variance, diffusion(ens)))
    logger.info("Ran %s for %d steps: final mean %.6g, variance %.6g", scheme, steps, ens.mean, ens.variance)

    return pd.DataFrame(rows, columns=["step", "time", "mean", "variance", "diffusion_coefficient"])


def time_average(trajectory: pd.DataFrame, column: str = "variance", start_fraction: float = 0.5,
                 batches: int = 20) -> Tuple[float, float]:
    """
    Time average of a recorded column over the final part of a run.

    Returns:
        Tuple of (mean, batch-means standard error)
    """
    values = trajectory[column].to_numpy()
    start = int(len(values) * start_fraction)
    return batch_means(values[start:], batches=batches)


def measure_step_time(scheme: str, N: int, p: int, stream: RngStream, repeats: int = 5,
                      naive: bool = False, L_W: float = 1.0) -> float:
    """Best-of-repeats wall time in seconds of one step on a Gaussian ensemble."""
    cfg = SimConfig(N=N, delta=0.01, p=p, sigma=0.5, potentials=double_well(L_W))
    ens = ParticleEnsemble(stream.normal(N))
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        if scheme == "full":
            step_full(ens, cfg, stream, naive=naive)
        else:
            STEPPERS[scheme](ens, cfg, stream)
        best = min(best, time.perf_counter() - start)
    return best
