"""
Large-N limit of the Curie-Weiss magnetization: drifts, equilibria and the
critical inverse temperature of the random-batch chain.

Classical drift:  f(beta, m) = 2 e^{-beta|m|} (sinh(beta m) - m cosh(beta m)),
evaluated here in the overflow-free form
    sign(m) (1 - e^{-2 beta |m|}) - m (1 + e^{-2 beta |m|}).
Batch drift:      f_p = (S1 - S2) - m (S1 + S2),
    S1(m) = E exp(-2 beta ((2X + 1 - p)/p)_+),  X ~ Bin(p - 1, (1 - m)/2),
    S2(m) = S1(-m).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp, xlogy

from numerics import (
    MonteCarloEstimate,
    PreconditionError,
    RngStream,
    RootBracket,
    find_root,
    log_binomial,
    monte_carlo_mean,
)
from numerics.montecarlo import DEFAULT_CHUNK
from utils.validators import validate_beta, validate_magnetization

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 20001
DEFAULT_DT = 1e-3
BETA_BRACKET = (0.5, 10.0)
MC_SAMPLES = 10_000_000
FD_STEP = 1e-6
EQUILIBRIUM_TOL = 1e-10
CLAMP_TOL = 1e-9
_ROW_CHUNK = 2048


def _check_p(p: int, minimum: int = 2) -> None:
    if not isinstance(p, (int, np.integer)) or p < minimum:
        raise PreconditionError(f"Batch size p must be an integer >= {minimum}, got {p!r}")


def _check_m(m) -> np.ndarray:
    values = np.asarray(m, dtype=float)
    for bad in values[~(np.abs(values) <= 1.0)].ravel()[:1]:
        is_valid, error_message = validate_magnetization(float(bad))
        raise PreconditionError(error_message or f"m must lie in [-1, 1], got {bad!r}")
    return values


def _scalar_or_array(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values


def drift_classic(beta: float, m):
    """Limit drift of the classical chain."""
    m_arr = _check_m(m)
    decay = np.exp(-2.0 * beta * np.abs(m_arr))
    out = np.sign(m_arr) * (1.0 - decay) - m_arr * (1.0 + decay)
    return _scalar_or_array(out, m)


def dm_drift_classic(beta: float, m):
    """Exact derivative of the classical drift in m (even in m, 2(beta - 1) at 0)."""
    m_arr = np.abs(_check_m(m))
    decay = np.exp(-2.0 * beta * m_arr)
    out = decay * (2.0 * beta - 1.0 + 2.0 * beta * m_arr) - 1.0
    return _scalar_or_array(out, m)


def _s1(p: int, beta: float, m: np.ndarray) -> np.ndarray:
    flat = np.atleast_1d(m).ravel()
    k = np.arange(p, dtype=float)
    log_c = log_binomial(p - 1, k)
    boltzmann = -2.0 * beta * np.maximum((2.0 * k + 1.0 - p) / p, 0.0)
    out = np.empty(flat.size)
    for start in range(0, flat.size, _ROW_CHUNK):
        chunk = flat[start:start + _ROW_CHUNK, None]
        log_terms = (log_c + xlogy(k, (1.0 - chunk) / 2.0)
                     + xlogy(p - 1.0 - k, (1.0 + chunk) / 2.0) + boltzmann)
        out[start:start + _ROW_CHUNK] = np.exp(logsumexp(log_terms, axis=1))
    return out.reshape(np.shape(m))


def s_sums(p: int, beta: float, m) -> Tuple[object, object]:
    """
    The binomial sums S1(m), S2(m) of the batch drift.

    Args:
        p: Batch size (>= 2)
        beta: Inverse temperature
        m: Magnetization (scalar or array in [-1, 1])

    Returns:
        Tuple of (S1, S2), scalars or arrays like m
    """
    _check_p(p)
    m_arr = _check_m(m)
    s1 = _s1(p, beta, m_arr)
    s2 = _s1(p, beta, -m_arr)
    return _scalar_or_array(s1, m), _scalar_or_array(s2, m)


def drift_rb(p: int, beta: float, m):
    """Limit drift f_p(beta, m); odd in m and exactly 0 at m = 0."""
    _check_p(p)
    m_arr = _check_m(m)
    s1 = _s1(p, beta, m_arr)
    s2 = _s1(p, beta, -m_arr)
    out = (s1 - s2) - m_arr * (s1 + s2)
    return _scalar_or_array(out, m)


def _half_binomial_pmf(p: int) -> Tuple[np.ndarray, np.ndarray]:
    k = np.arange(p, dtype=float)
    return k, np.exp(log_binomial(p - 1, k) - (p - 1) * math.log(2.0))


def dm_drift_rb_at_zero(p: int, beta: float) -> float:
    """
    d/dm f_p(beta, 0) = 2 (1/2)^{p-1} sum_k (p - 2 - 2k) C(p-1, k) e^{-2 beta ((2k+1-p)/p)_+}.
    """
    _check_p(p)
    k, pmf = _half_binomial_pmf(p)
    boltzmann = np.exp(-2.0 * beta * np.maximum((2.0 * k + 1.0 - p) / p, 0.0))
    return float(2.0 * np.sum((p - 2.0 - 2.0 * k) * pmf * boltzmann))


def g_p_exact(p: int, beta: float) -> float:
    """g_p(beta) = E[2(-p Y - 1) e^{-2 beta Y_+}], Y = 2X/p - (p-1)/p, X ~ Bin(p-1, 1/2)."""
    _check_p(p)
    x, pmf = _half_binomial_pmf(p)
    y = 2.0 * x / p - (p - 1.0) / p
    return float(np.sum(pmf * 2.0 * (-p * y - 1.0) * np.exp(-2.0 * beta * np.maximum(y, 0.0))))


def g_p_monte_carlo(p: int, beta: float, samples: int, stream: RngStream,
                    chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> MonteCarloEstimate:
    """Monte-Carlo estimate of g_p(beta) with its standard error."""
    _check_p(p)

    def sampler(chunk_stream: RngStream, size: int) -> np.ndarray:
        x = chunk_stream.binomial(p - 1, 0.5, size)
        y = 2.0 * x / p - (p - 1.0) / p
        return 2.0 * (-p * y - 1.0) * np.exp(-2.0 * beta * np.maximum(y, 0.0))

    return monte_carlo_mean(sampler, samples, stream, chunk_size=chunk_size, workers=workers)


def g_p_asymptotic(p: int, beta: float) -> float:
    """Large-p expansion 2(beta - 1) - (2/sqrt(p)) sqrt(2/pi) (2 beta^2 - beta)."""
    _check_p(p)
    return 2.0 * (beta - 1.0) - (2.0 / math.sqrt(p)) * math.sqrt(2.0 / math.pi) * (2.0 * beta ** 2 - beta)


def critical_beta(p: int, tol: float = 1e-10,
                  bracket: Tuple[float, float] = BETA_BRACKET) -> float:
    """
    Unique root beta_{c,p} of beta -> d/dm f_p(beta, 0).

    Raises:
        PreconditionError: p in {2, 3}, where 0 is the unique (stable) equilibrium
    """
    _check_p(p)
    if p < 4:
        raise PreconditionError(f"No phase transition for p={p}: 0 is the unique stable equilibrium")
    # bracket width tol/10 keeps |g(root)| below tol for slopes up to 20
    beta_c = find_root(lambda b: dm_drift_rb_at_zero(p, b), RootBracket(bracket[0], bracket[1], tol / 10.0))
    logger.info("beta_c for p=%d: %.12f", p, beta_c)
    return beta_c


def critical_beta_asymptotic(p: int) -> float:
    """1 + sqrt(2 / (p pi))."""
    _check_p(p)
    return 1.0 + math.sqrt(2.0 / (p * math.pi))


def critical_beta_classic(tol: float = 1e-12) -> float:
    """Root of beta -> d/dm f(beta, 0); equals 1."""
    return find_root(lambda b: dm_drift_classic(b, 0.0), RootBracket(BETA_BRACKET[0], BETA_BRACKET[1], tol))


def drift_p3_nonzero_equilibria(beta: float) -> Tuple[float, float]:
    """
    The nonzero roots +-sqrt((1 + 3e)/(1 - e)), e = exp(-4 beta/3), of the p = 3 drift.

    Both lie outside [-1, 1], so 0 is the only equilibrium for p = 3.
    """
    e = math.exp(-4.0 * beta / 3.0)
    root = math.sqrt((1.0 + 3.0 * e) / (1.0 - e))
    return -root, root


@dataclass(frozen=True)
class LimitDrift:
    """Drift of the limit ODE dm/dt = f(beta, m); p=None selects the classical drift."""
    beta: float
    p: Optional[int] = None

    def __post_init__(self):
        is_valid, error_message = validate_beta(self.beta)
        if not is_valid:
            raise PreconditionError(error_message)
        if self.p is not None:
            _check_p(self.p)

    def __call__(self, m):
        if self.p is None:
            return drift_classic(self.beta, m)
        return drift_rb(self.p, self.beta, m)

    def derivative(self, m: float) -> float:
        if self.p is None:
            return float(dm_drift_classic(self.beta, m))
        if m == 0.0:
            return dm_drift_rb_at_zero(self.p, self.beta)
        lo, hi = max(m - FD_STEP, -1.0), min(m + FD_STEP, 1.0)
        return float((drift_rb(self.p, self.beta, hi) - drift_rb(self.p, self.beta, lo)) / (hi - lo))

    def to_dict(self) -> dict:
        return {"beta": self.beta, "p": self.p}


@dataclass(frozen=True)
class Equilibrium:
    m: float
    stable: bool
    slope: float


@dataclass
class EquilibriumReport:
    """Equilibria found by the grid scan, with the slope of the drift at 0."""
    drift: LimitDrift
    equilibria: List[Equilibrium]
    slope_at_zero: float
    warnings: List[str] = field(default_factory=list)

    @property
    def points(self) -> List[float]:
        return [e.m for e in self.equilibria]

    def to_dict(self) -> dict:
        return {
            "beta": self.drift.beta,
            "p": self.drift.p,
            "slope_at_zero": self.slope_at_zero,
            "equilibria": [{"m": e.m, "stable": e.stable, "slope": e.slope} for e in self.equilibria],
            "warnings": list(self.warnings),
        }


def equilibria(drift: LimitDrift, grid_points: int = DEFAULT_GRID_POINTS) -> EquilibriumReport:
    """
    Zeros of the drift on [-1, 1] by sign-change scan plus bisection.

    Stability is the sign of the drift's slope at each zero. Roots closer than
    ten grid spacings are reported with a multiplicity warning.
    """
    if grid_points < 3:
        raise PreconditionError(f"Equilibrium grid needs at least 3 points, got {grid_points}")
    if grid_points % 2 == 0:
        grid_points += 1  # keep m = 0 on the grid
    grid = np.linspace(-1.0, 1.0, grid_points)
    grid[grid_points // 2] = 0.0
    values = np.asarray(drift(grid))
    spacing = 2.0 / (grid_points - 1)

    roots = [float(grid[i]) for i in np.flatnonzero(values == 0.0)]
    for i in np.flatnonzero(values[:-1] * values[1:] < 0):
        roots.append(find_root(lambda x: float(drift(x)), RootBracket(grid[i], grid[i + 1], 1e-15)))
    roots.sort()

    warnings = []
    found = []
    for m_star in roots:
        residual = abs(float(drift(m_star)))
        if residual >= EQUILIBRIUM_TOL:
            warnings.append(f"Equilibrium {m_star:.12g} has residual {residual:.2e}")
        slope = drift.derivative(m_star)
        found.append(Equilibrium(m_star, slope < 0, slope))
    for a, b in zip(roots, roots[1:]):
        if b - a < 10.0 * spacing:
            warnings.append(f"Equilibria {a:.6g} and {b:.6g} are closer than 10 grid spacings; "
                            f"possible multiple root near beta_c")
    for message in warnings:
        logger.warning(message)

    return EquilibriumReport(drift, found, drift.derivative(0.0), warnings)


def ode_integrate(drift: LimitDrift, m0: float, dt: float = DEFAULT_DT, T: float = 10.0) -> pd.DataFrame:
    """
    Classical fourth-order Runge-Kutta solution of dm/dt = f(m).

    Values leaving [-1, 1] by more than 1e-9 are clamped and reported.

    Returns:
        DataFrame with columns t, m
    """
    is_valid, error_message = validate_magnetization(m0)
    if not is_valid:
        raise PreconditionError(error_message)
    if not dt > 0 or not T >= 0:
        raise PreconditionError(f"Need dt > 0 and T >= 0, got dt={dt}, T={T}")

    steps = int(math.ceil(T / dt - 1e-12))
    h = T / steps if steps else dt
    f = lambda x: float(drift(min(max(x, -1.0), 1.0)))

    ms = np.empty(steps + 1)
    ms[0] = m = float(m0)
    clamped = 0
    for n in range(1, steps + 1):
        k1 = f(m)
        k2 = f(m + 0.5 * h * k1)
        k3 = f(m + 0.5 * h * k2)
        k4 = f(m + h * k3)
        m = m + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if abs(m) > 1.0 + CLAMP_TOL:
            clamped += 1
            m = math.copysign(1.0, m)
        ms[n] = m
    if clamped:
        logger.warning("ODE trajectory left [-1, 1] and was clamped %d times", clamped)

    return pd.DataFrame({"t": h * np.arange(steps + 1), "m": ms})


def critical_table(p_values, tol: float = 1e-10, mc_samples: Optional[int] = None,
                   stream: Optional[RngStream] = None, chunk_size: int = DEFAULT_CHUNK,
                   workers: int = 1) -> pd.DataFrame:
    """
    Rows (p, beta_c, beta_c_asymptotic, g_p(1), g_p(asymptotic beta_c)) with Monte-Carlo
    columns when mc_samples is given.
    """
    rows = []
    for i, p in enumerate(p_values):
        asymptotic = critical_beta_asymptotic(p)
        row = {
            "p": int(p),
            "beta_c": critical_beta(p, tol) if p >= 4 else float("nan"),
            "beta_c_asymptotic": asymptotic,
            "g_p_at_1": g_p_exact(p, 1.0),
            "g_p_at_asymptotic": g_p_exact(p, asymptotic),
        }
        if mc_samples is not None:
            if stream is None:
                raise PreconditionError("Monte-Carlo columns require a random stream (--seed)")
            sub = stream.spawn(i)
            at_1 = g_p_monte_carlo(p, 1.0, mc_samples, sub.spawn(0), chunk_size, workers)
            at_asym = g_p_monte_carlo(p, asymptotic, mc_samples, sub.spawn(1), chunk_size, workers)
            row.update({
                "g_p_at_1_mc": at_1.mean,
                "g_p_at_1_se": at_1.std_error,
                "g_p_at_asymptotic_mc": at_asym.mean,
                "g_p_at_asymptotic_se": at_asym.std_error,
            })
        rows.append(row)
    return pd.DataFrame(rows)
