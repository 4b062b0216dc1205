"""
Finite-N Curie-Weiss magnetization chain, classical and with random batches.

The chain lives on the grid m = -1 + 2i/N, i = 0..N, where i is the number of
+1 spins. One step picks a spin uniformly; in the batch model it also draws the
p-1 other members of its cluster without replacement, and the flip is accepted
with probability exp(-beta * dH_+), dH = (2/p) * s_i * sum of the other cluster
spins. The classical chain is the case p = N.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.special import logsumexp
from tqdm import tqdm

from numerics import (
    PowerIterationResult,
    PreconditionError,
    RateRangeError,
    RngStream,
    log_binomial,
    power_iterate,
)
from numerics.markov import DEFAULT_EPS, DEFAULT_MAX_ITER
from utils.validators import validate_batch_size, validate_beta, validate_magnetization, validate_spin_count

logger = logging.getLogger(__name__)

GRID_TOL = 1e-9
RATE_TOL = 1e-12


@dataclass(frozen=True)
class CwParams:
    """Spin count N, inverse temperature beta, optional batch size p (None = classical)."""
    N: int
    beta: float
    p: Optional[int] = None

    def __post_init__(self):
        for is_valid, error_message in (
            validate_spin_count(self.N),
            validate_beta(self.beta, allow_zero=True),
            validate_batch_size(self.N, self.p),
        ):
            if not is_valid:
                raise PreconditionError(error_message)

    @property
    def is_classical(self) -> bool:
        return self.p is None

    @property
    def batch_size(self) -> int:
        """Cluster size used by the dynamics (N for the classical chain)."""
        return self.N if self.p is None else self.p

    def to_dict(self) -> dict:
        return {"N": self.N, "beta": self.beta, "p": self.p}


@dataclass(frozen=True)
class MagnetizationGrid:
    """States m_i = -1 + 2i/N, i = 0..N."""
    N: int

    def __post_init__(self):
        is_valid, error_message = validate_spin_count(self.N)
        if not is_valid:
            raise PreconditionError(error_message)

    @property
    def spacing(self) -> float:
        return 2.0 / self.N

    @property
    def states(self) -> np.ndarray:
        return (2.0 * np.arange(self.N + 1) - self.N) / self.N

    def index_of(self, m: float) -> int:
        """
        Grid index (number of +1 spins) of a magnetization.

        Raises:
            PreconditionError: m is outside [-1, 1] or off the grid
        """
        is_valid, error_message = validate_magnetization(m)
        if not is_valid:
            raise PreconditionError(error_message)
        position = (m + 1.0) * self.N / 2.0
        index = int(round(position))
        if abs(position - index) > GRID_TOL:
            raise PreconditionError(
                f"m={m!r} is off the grid of spacing 2/{self.N}: spin counts (1-m)N/2 must be integers"
            )
        return index

    def counts(self, m: float) -> Tuple[int, int]:
        """(number of -1 spins, number of +1 spins) at magnetization m."""
        n_plus = self.index_of(m)
        return self.N - n_plus, n_plus


@dataclass(frozen=True)
class SpinConfiguration:
    """Sequence of +-1 spins with its magnetization."""
    spins: np.ndarray
    magnetization: float = field(init=False)

    def __post_init__(self):
        spins = np.asarray(self.spins, dtype=np.int8).copy()
        if spins.ndim != 1 or spins.size < 1 or not np.all(np.abs(spins) == 1):
            raise PreconditionError("Spin configuration must be a non-empty sequence of +1/-1 values")
        spins.setflags(write=False)
        object.__setattr__(self, "spins", spins)
        object.__setattr__(self, "magnetization", int(spins.sum(dtype=np.int64)) / spins.size)

    @property
    def N(self) -> int:
        return self.spins.size

    @classmethod
    def from_magnetization(cls, N: int, m: float) -> "SpinConfiguration":
        """Configuration with the +1 spins first; exchangeability makes the layout irrelevant."""
        n_plus = MagnetizationGrid(N).index_of(m)
        spins = -np.ones(N, dtype=np.int8)
        spins[:n_plus] = 1
        return cls(spins)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Tridiagonal row-stochastic matrix over the magnetization grid."""
    params: CwParams
    matrix: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def grid(self) -> MagnetizationGrid:
        return MagnetizationGrid(self.params.N)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def hamiltonian(cfg: SpinConfiguration) -> float:
    """H = -N m^2 / 2."""
    return -cfg.N * cfg.magnetization ** 2 / 2.0


def _check_rate(value: float, what: str, m: float) -> float:
    if not (-RATE_TOL <= value <= 1.0 + RATE_TOL) or not np.isfinite(value):
        raise RateRangeError(f"{what} rate {value!r} at m={m!r} is outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def classical_rates(m: float, params: CwParams) -> Tuple[float, float]:
    """
    Probabilities of moving to m + 2/N (right) and m - 2/N (left) without batches.

    Args:
        m: Grid state
        params: Parameters with p absent

    Returns:
        Tuple of (right, left)
    """
    if not params.is_classical:
        raise PreconditionError("classical_rates requires p to be absent; use rb_rates")
    N, beta = params.N, params.beta
    n_minus, n_plus = MagnetizationGrid(N).counts(m)

    # exponents (beta N / 2)(m^2 - (m +- 2/N)^2)_+ in integer form
    right = (n_minus / N) * np.exp(-2.0 * beta * max((N - 1 - 2 * n_plus) / N, 0.0))
    left = (n_plus / N) * np.exp(-2.0 * beta * max((2 * n_plus - N - 1) / N, 0.0))
    return _check_rate(float(right), "right", m), _check_rate(float(left), "left", m)


def rb_rates(m: float, params: CwParams) -> Tuple[float, float]:
    """
    Probabilities of moving right/left with random batches of size p.

    The chosen spin's p-1 cluster mates are a hypergeometric draw from the other
    N-1 spins; k counts the -1 spins among them. Binomial coefficients are
    taken in log space and the sum is max-shifted.

    Args:
        m: Grid state
        params: Parameters with p present

    Returns:
        Tuple of (right, left)
    """
    if params.p is None:
        raise PreconditionError("rb_rates requires a batch size p")
    N, beta, p = params.N, params.beta, params.p
    n_minus, n_plus = MagnetizationGrid(N).counts(m)

    k = np.arange(p, dtype=float)
    log_norm = log_binomial(N - 1, p - 1)

    right = 0.0
    if n_minus > 0:
        log_terms = (log_binomial(n_minus - 1, k) + log_binomial(n_plus, p - 1 - k) - log_norm
                     - 2.0 * beta * np.maximum((2.0 * k + 1.0 - p) / p, 0.0))
        right = (n_minus / N) * np.exp(logsumexp(log_terms))

    left = 0.0
    if n_plus > 0:
        log_terms = (log_binomial(n_minus, k) + log_binomial(n_plus - 1, p - 1 - k) - log_norm
                     - 2.0 * beta * np.maximum((p - 1.0 - 2.0 * k) / p, 0.0))
        left = (n_plus / N) * np.exp(logsumexp(log_terms))

    return _check_rate(float(right), "right", m), _check_rate(float(left), "left", m)


def rates(m: float, params: CwParams) -> Tuple[float, float]:
    """Dispatch to classical_rates or rb_rates."""
    return classical_rates(m, params) if params.is_classical else rb_rates(m, params)


def build_matrix(params: CwParams) -> TransitionMatrix:
    """
    Dense tridiagonal transition matrix of the magnetization chain.

    Returns:
        TransitionMatrix whose row i is the law of the next state from m_i
    """
    grid = MagnetizationGrid(params.N)
    size = params.N + 1
    right = np.empty(size)
    left = np.empty(size)
    for i, m in enumerate(grid.states):
        right[i], left[i] = rates(m, params)

    stay = 1.0 - right - left
    if np.any(stay < -RATE_TOL):
        i = int(np.argmin(stay))
        raise RateRangeError(f"Rates at m={grid.states[i]!r} sum to {right[i] + left[i]!r} > 1")
    stay = np.maximum(stay, 0.0)

    matrix = np.diag(stay)
    idx = np.arange(size - 1)
    matrix[idx, idx + 1] = right[:-1]
    matrix[idx + 1, idx] = left[1:]

    for array in (matrix, right, left):
        array.setflags(write=False)
    return TransitionMatrix(params, matrix, right, left)


def simulate_chain(params: CwParams, m0: float, steps: int, stream: RngStream) -> np.ndarray:
    """
    Spin-level simulation of the chain.

    Every step draws the spin index, the cluster mates (skipped when the cluster
    is the whole system) and one uniform for the acceptance test, so the
    classical chain and the p = N chain consume the stream identically.

    Args:
        params: Chain parameters
        m0: Initial grid state
        steps: Number of steps
        stream: Random source

    Returns:
        Array of length steps + 1 with the magnetization after every step
    """
    if steps < 0:
        raise PreconditionError(f"steps must be non-negative, got {steps}")
    N, beta, p = params.N, params.beta, params.batch_size
    spins = SpinConfiguration.from_magnetization(N, m0).spins.astype(np.int64)
    total = int(spins.sum())

    trajectory = np.empty(steps + 1)
    trajectory[0] = total / N
    for t in range(1, steps + 1):
        i = int(stream.integers(N))
        if p == N:
            others = total - spins[i]
        else:
            mates = stream.choice_without_replacement(N - 1, p - 1)
            mates = mates + (mates >= i)
            others = int(spins[mates].sum())
        delta_h = (2.0 / p) * spins[i] * others
        u = stream.uniform()
        if delta_h <= 0 or u < np.exp(-beta * delta_h):
            spins[i] = -spins[i]
            total += 2 * spins[i]
        trajectory[t] = total / N
    return trajectory


def _one_step_moves(params: CwParams, n_plus: int, trials: int,
                    stream: RngStream) -> Tuple[int, int]:
    # exact law of one spin-level step from a configuration with n_plus +1 spins
    N, beta, p = params.N, params.beta, params.batch_size
    n_minus = N - n_plus
    chosen_plus = stream.integers(N, size=trials) < n_plus
    sign = np.where(chosen_plus, 1, -1)
    mates_minus = stream.hypergeometric(n_minus - (~chosen_plus), n_plus - chosen_plus, p - 1)
    others = (p - 1) - 2 * mates_minus
    delta_h = (2.0 / p) * sign * others
    accepted = stream.uniform(trials) < np.exp(-beta * np.maximum(delta_h, 0.0))
    return int(np.sum(accepted & ~chosen_plus)), int(np.sum(accepted & chosen_plus))


def empirical_rates(params: CwParams, trials: int, stream: RngStream,
                    protocol: str = "independent", processes: int = 10,
                    steps: int = 1000, progress: bool = False) -> pd.DataFrame:
    """
    Empirical one-step move frequencies per grid state.

    protocol="independent" restarts every trial from a fresh configuration at
    the state (state i uses sub-stream i). protocol="trajectory" runs
    `processes` chains of `steps` steps, started on evenly spaced states, and
    counts moves per visited state; `trials` is ignored there.

    Returns:
        DataFrame with columns m, right_empirical, left_empirical, visits
    """
    grid = MagnetizationGrid(params.N)
    states = grid.states
    rights = np.zeros(params.N + 1)
    lefts = np.zeros(params.N + 1)
    visits = np.zeros(params.N + 1)

    if protocol == "independent":
        if trials < 1:
            raise PreconditionError(f"trials must be at least 1, got {trials}")
        for i in tqdm(range(params.N + 1), desc="states", disable=not progress):
            rights[i], lefts[i] = _one_step_moves(params, i, trials, stream.spawn(i))
            visits[i] = trials
    elif protocol == "trajectory":
        starts = np.linspace(0, params.N, processes).round().astype(int)
        for j, start in enumerate(tqdm(starts, desc="processes", disable=not progress)):
            path = simulate_chain(params, states[start], steps, stream.spawn(j))
            idx = np.rint((path + 1.0) * params.N / 2.0).astype(int)
            moves = np.diff(idx)
            np.add.at(visits, idx[:-1], 1)
            np.add.at(rights, idx[:-1][moves > 0], 1)
            np.add.at(lefts, idx[:-1][moves < 0], 1)
    else:
        raise PreconditionError(f"Unknown protocol {protocol!r}; choose 'independent' or 'trajectory'")

    with np.errstate(invalid="ignore", divide="ignore"):
        return pd.DataFrame({
            "m": states,
            "right_empirical": np.where(visits > 0, rights / visits, np.nan),
            "left_empirical": np.where(visits > 0, lefts / visits, np.nan),
            "visits": visits.astype(int),
        })


def rates_table(params: CwParams, trials: Optional[int] = None,
                stream: Optional[RngStream] = None, progress: bool = False) -> pd.DataFrame:
    """Theoretical rates per state, plus empirical columns when trials is given."""
    tm = build_matrix(params)
    table = pd.DataFrame({
        "m": tm.grid.states,
        "right_theoretical": tm.right,
        "left_theoretical": tm.left,
    })
    if trials is not None:
        if stream is None:
            raise PreconditionError("Empirical rates require a random stream (--seed)")
        empirical = empirical_rates(params, trials, stream, progress=progress)
        table["right_empirical"] = empirical["right_empirical"].to_numpy()
        table["left_empirical"] = empirical["left_empirical"].to_numpy()
    return table


def invariant_distribution(params: CwParams, eps: float = DEFAULT_EPS,
                           max_iter: int = DEFAULT_MAX_ITER) -> PowerIterationResult:
    """Invariant law of the chain by power iteration from the uniform law."""
    tm = build_matrix(params)
    v0 = np.full(tm.size, 1.0 / tm.size)
    result = power_iterate(tm, v0, eps=eps, max_iter=max_iter, scale=params.N)
    logger.info("Invariant law for %s after %d iterations", params.to_dict(), result.iterations)
    return result


def eigen_invariant(tm: TransitionMatrix) -> np.ndarray:
    """Left eigenvector of eigenvalue 1, normalised; a direct check on power iteration."""
    values, vectors = linalg.eig(tm.matrix.T)
    k = int(np.argmin(np.abs(values - 1.0)))
    v = np.real(vectors[:, k])
    return v / v.sum()


def gibbs_distribution(N: int, beta: float) -> np.ndarray:
    """nu(m) proportional to C(N, n_+) exp(beta N m^2 / 2) on the grid."""
    grid = MagnetizationGrid(N)
    m = grid.states
    log_weights = log_binomial(N, np.arange(N + 1)) + beta * N * m ** 2 / 2.0
    return np.exp(log_weights - logsumexp(log_weights))


def detailed_balance_residual(params: CwParams) -> float:
    """max_m |nu(m) r(m, m+) - nu(m+) r(m+, m)| for the Gibbs law nu of the classical chain."""
    tm = build_matrix(params)
    nu = gibbs_distribution(params.N, params.beta)
    flow_up = nu[:-1] * tm.right[:-1]
    flow_down = nu[1:] * tm.left[1:]
    return float(np.max(np.abs(flow_up - flow_down)))


def local_maxima(distribution: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """
    Indices of local maxima of a distribution on the grid.

    Neighbours within rel_tol * max are treated as ties; a flat top counts once.
    """
    v = np.asarray(distribution, dtype=float)
    tol = rel_tol * float(np.max(v))
    maxima = []
    i, n = 0, v.size
    while i < n:
        j = i
        while j + 1 < n and abs(v[j + 1] - v[i]) <= tol:
            j += 1
        left_ok = i == 0 or v[i - 1] < v[i] - tol
        right_ok = j == n - 1 or v[j + 1] < v[j] - tol
        if left_ok and right_ok:
            maxima.append((i + j) // 2)
        i = j + 1
    return np.asarray(maxima, dtype=int)
