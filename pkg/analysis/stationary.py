"""
Stationary distributions of the double-well McKean-Vlasov dynamics.

With U(x) = x^4/4 - x^2/2 and W(x) = L_W x^2/2 a stationary law is

    g(x; sigma, kappa) ∝ exp(-(U(x) + L_W/2 (x - kappa)^2) / sigma)

where kappa is its own mean. The fixed-point maps are f1 (mean of g) and f2
(variance of g). Below the critical diffusion sigma_c there are three
solutions (zero, plus, minus); above it only the symmetric one.

The effective dynamics with batch size p and step delta have the same
stationary laws, with sigma replaced by sigma' + delta L_W^2 kappa2 / (2(p-1)).
"""

import logging
import math
import numbers
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import binom

from numerics import (
    ConvergenceError,
    NearCriticalError,
    NumericalError,
    PreconditionError,
    Quadrature,
    RngStream,
    RootBracket,
    SupercriticalError,
    expand_bracket,
    find_root,
    golden_section_max,
    integrate_interval,
    log_density_expectations,
    monte_carlo_mean,
    quartic_radius,
    truncation_radius,
)
from utils.validators import validate_branch, validate_positive

logger = logging.getLogger(__name__)

SIGMA0_FRACTION = 0.05
K_MAX = 2.0
NEAR_CRITICAL_FLOOR = 1e-5
C0_MARGIN = 0.5
C_LIP_GRID = 24
CRITICAL_BRACKET = (1e-3, 10.0)
CRITICAL_TOL = 1e-12
KAPPA_TOL = 1e-13
SIGMA_TOL = 1e-12
RESIDUAL_TOL = 1e-9
EFFECTIVE_RESIDUAL_TOL = 1e-8
KURTOSIS_RADIUS = 12.0
RAW_PANELS = 256
DEFAULT_RULE = Quadrature()


def _check_sigma(sigma: float) -> None:
    is_valid, error_message = validate_positive(sigma, "sigma")
    if not is_valid:
        raise PreconditionError(error_message)


def _check_L_W(L_W: float) -> None:
    is_valid, error_message = validate_positive(L_W, "L_W")
    if not is_valid:
        raise PreconditionError(error_message)


def _check_effective(delta: float, p: int) -> None:
    is_valid, error_message = validate_positive(delta, "delta", allow_zero=True)
    if not is_valid:
        raise PreconditionError(error_message)
    if not isinstance(p, numbers.Integral) or isinstance(p, bool) or p < 2:
        raise PreconditionError(f"p must be an integer >= 2, got {p!r}")


def _rule(q: Optional[Quadrature], radius: float) -> Quadrature:
    q = q or DEFAULT_RULE
    return q if q.half_width is not None else q.with_half_width(radius)


def effective_coefficient(delta: float, p: int, L_W: float) -> float:
    """delta L_W^2 / (2(p-1)), the weight of kappa2 in the effective diffusion."""
    return delta * L_W ** 2 / (2.0 * (p - 1))


@dataclass(frozen=True)
class ModelParams:
    """Double-well model parameters, optionally with an effective-dynamics pair (delta, p)."""
    L_W: float
    sigma: float
    delta: Optional[float] = None
    p: Optional[int] = None

    def __post_init__(self):
        _check_L_W(self.L_W)
        _check_sigma(self.sigma)
        if (self.delta is None) != (self.p is None):
            raise PreconditionError("delta and p must be given together")
        if self.delta is not None:
            is_valid, error_message = validate_positive(self.delta, "delta")
            if not is_valid:
                raise PreconditionError(error_message)
            _check_effective(self.delta, self.p)

    @property
    def is_effective(self) -> bool:
        return self.delta is not None

    @property
    def coefficient(self) -> float:
        return effective_coefficient(self.delta, self.p, self.L_W) if self.is_effective else 0.0

    def check_smallness(self, q: Optional[Quadrature] = None, **options) -> "C0Estimate":
        """
        Estimate c0 for this (delta, p) and raise if it is not small enough.

        Args:
            q: Quadrature rule
            **options: sigma0_fraction, grid and margin, passed to c0_estimate
        """
        if not self.is_effective:
            raise PreconditionError("Smallness only applies with (delta, p)")
        estimate = c0_estimate(self.delta, self.p, self.L_W, q=q, **options)
        if not estimate.passed:
            raise PreconditionError(
                f"delta/(p-1) too large: delta L_W^2 C_lip/(2(p-1)) = {estimate.value:.4g} "
                f">= {estimate.threshold}"
            )
        return estimate

    def to_dict(self) -> dict:
        return {"L_W": self.L_W, "sigma": self.sigma, "delta": self.delta, "p": self.p}


@dataclass(frozen=True)
class StationarySolution:
    """
    A stationary law (kappa1 = mean, kappa2 = variance).

    For model "Eff", sigma is the effective coefficient sigma' and nl_sigma the
    diffusion of the nonlinear law with the same (kappa1, kappa2).
    """
    sigma: float
    kappa1: float
    kappa2: float
    branch: str
    model: str = "NL"
    residual: float = 0.0
    nl_sigma: Optional[float] = None

    def __post_init__(self):
        is_valid, error_message = validate_branch(self.branch)
        if not is_valid:
            raise PreconditionError(error_message)
        if self.model not in ("NL", "Eff"):
            raise PreconditionError(f"Unknown model {self.model!r}")
        if not self.kappa2 > 0:
            raise NumericalError(f"Non-positive variance {self.kappa2!r} for branch {self.branch}")
        if self.branch == "zero" and self.kappa1 != 0.0:
            raise PreconditionError("Zero branch must have kappa1 = 0")
        if self.branch == "plus" and not self.kappa1 > 0:
            raise NumericalError(f"Plus branch with kappa1 = {self.kappa1!r}")
        if self.branch == "minus" and not self.kappa1 < 0:
            raise NumericalError(f"Minus branch with kappa1 = {self.kappa1!r}")

    def negated(self) -> "StationarySolution":
        mirror = {"plus": "minus", "minus": "plus", "zero": "zero"}[self.branch]
        return StationarySolution(self.sigma, -self.kappa1 if self.kappa1 else 0.0, self.kappa2,
                                  mirror, self.model, self.residual, self.nl_sigma)

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "branch": self.branch,
            "model": self.model,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "residual": self.residual,
            "nl_sigma": self.nl_sigma if self.nl_sigma is not None else self.sigma,
        }


def log_density_g(x, sigma: float, kappa: float, L_W: float):
    """log g = -(U(x) + L_W/2 (x - kappa)^2) / sigma."""
    x = np.asarray(x, dtype=float)
    return -(x ** 4 / 4.0 - x ** 2 / 2.0 + 0.5 * L_W * (x - kappa) ** 2) / sigma


def density_g(x, sigma: float, kappa: float, L_W: float):
    """Unnormalised stationary density g(x; sigma, kappa)."""
    _check_sigma(sigma)
    return np.exp(log_density_g(x, sigma, kappa, L_W))


def g_moments(sigma: float, kappa: float, L_W: float, q: Optional[Quadrature] = None) -> Tuple[float, float]:
    """
    Mean and variance of g.

    Returns:
        Tuple of (f1, f2)
    """
    _check_sigma(sigma)
    rule = _rule(q, truncation_radius(sigma, kappa))
    m1, m2 = log_density_expectations(
        lambda x: log_density_g(x, sigma, kappa, L_W),
        (lambda x: x, lambda x: (x - kappa) ** 2),
        rule,
    )
    # centred at kappa, then shifted to the mean
    return m1, m2 - (m1 - kappa) ** 2


def f1(sigma: float, kappa: float, L_W: float, q: Optional[Quadrature] = None) -> float:
    """Mean of g(.; sigma, kappa)."""
    return g_moments(sigma, kappa, L_W, q)[0]


def f2(sigma: float, kappa: float, L_W: float, q: Optional[Quadrature] = None) -> float:
    """Variance of g(.; sigma, kappa)."""
    return g_moments(sigma, kappa, L_W, q)[1]


def symmetric_moments(sigma: float, L_W: float, q: Optional[Quadrature] = None) -> Tuple[float, float]:
    """Second and fourth moments of g at kappa = 0."""
    _check_sigma(sigma)
    rule = _rule(q, truncation_radius(sigma, 0.0))
    return log_density_expectations(
        lambda x: log_density_g(x, sigma, 0.0, L_W),
        (lambda x: x ** 2, lambda x: x ** 4),
        rule,
    )


@lru_cache(maxsize=64)
def _critical_sigma(L_W: float, tol: float, q: Quadrature) -> float:
    def excess_variance(sigma):
        return f2(sigma, 0.0, L_W, q) - sigma / L_W

    lo, hi = expand_bracket(excess_variance, *CRITICAL_BRACKET, floor=1e-8)
    sigma_c = find_root(excess_variance, RootBracket(lo, hi, tol))
    logger.info("Critical diffusion for L_W=%g: %.15g", L_W, sigma_c)
    return sigma_c


def critical_sigma(L_W: float, tol: float = CRITICAL_TOL, q: Optional[Quadrature] = None) -> float:
    """
    Critical diffusion: root of sigma -> f2(sigma, 0) - sigma/L_W.

    Args:
        L_W: Interaction strength
        tol: Root tolerance in sigma
        q: Quadrature rule (radius chosen per sigma when unset)

    Returns:
        sigma_c
    """
    _check_L_W(L_W)
    return _critical_sigma(float(L_W), float(tol), q or DEFAULT_RULE)


def critical_sigma_raw(L_W: float, tol: float = CRITICAL_TOL) -> float:
    """
    Critical diffusion from the scaled integral

        int_0^R (t^2 - 1/(2 L_W)) exp((1 - L_W) t^2 - sigma t^4) dt = 0,

    found by plain bisection on a finer rule. Independent of f2.
    """
    _check_L_W(L_W)
    a = 1.0 - L_W

    def condition(sigma):
        peak = a ** 2 / (4.0 * sigma) if a > 0 else 0.0
        radius = quartic_radius(sigma, a)
        return integrate_interval(
            lambda t: (t ** 2 - 0.5 / L_W) * np.exp(a * t ** 2 - sigma * t ** 4 - peak),
            0.0, radius, panels=RAW_PANELS,
        )

    lo, hi = expand_bracket(condition, *CRITICAL_BRACKET, floor=1e-8)
    return find_root(condition, RootBracket(lo, hi, tol), max_iter=400, accelerate=False)


def _gap(sigma: float, L_W: float, q: Optional[Quadrature]) -> float:
    sigma_c = critical_sigma(L_W, q=q)
    return sigma_c - sigma


def solve_branch(sigma: float, L_W: float, branch: str, q: Optional[Quadrature] = None,
                 k_max: float = K_MAX, near_critical_floor: float = NEAR_CRITICAL_FLOOR) -> StationarySolution:
    """
    Solve the stationary fixed point kappa = f1(sigma, kappa) on one branch.

    The plus branch uses the shape of xi(kappa) = f1(sigma, kappa) - kappa,
    increasing then decreasing on (0, k_max]: golden-section search finds its
    maximiser, then bisection runs on the decreasing side. The minus branch
    is the mirror image.

    Raises:
        SupercriticalError: plus/minus requested at sigma >= sigma_c
        NearCriticalError: sigma_c - sigma below the solvable floor
    """
    _check_sigma(sigma)
    _check_L_W(L_W)
    is_valid, error_message = validate_branch(branch)
    if not is_valid:
        raise PreconditionError(error_message)

    if branch == "zero":
        return StationarySolution(sigma, 0.0, f2(sigma, 0.0, L_W, q), "zero")

    gap = _gap(sigma, L_W, q)
    if gap <= 0:
        raise SupercriticalError(
            f"supercritical: sigma={sigma!r} >= sigma_c={sigma - gap!r}; only the zero branch exists"
        )
    if gap < near_critical_floor:
        raise NearCriticalError(
            f"sigma_c - sigma = {gap:.3g} is below the solvable floor {near_critical_floor:g}"
        )
    if branch == "minus":
        return solve_branch(sigma, L_W, "plus", q, k_max, near_critical_floor).negated()

    def xi(kappa):
        return f1(sigma, kappa, L_W, q) - kappa

    peak, xi_peak = golden_section_max(xi, 0.0, k_max, tol=1e-10)
    if not xi_peak > 0:
        raise NumericalError(f"No positive fixed point at sigma={sigma!r}: max xi = {xi_peak!r}")
    xi_end = xi(k_max)
    if not xi_end < 0:
        raise NumericalError(f"xi(k_max={k_max}) = {xi_end!r} is not negative; raise k_max")

    kappa1 = find_root(xi, RootBracket(peak, k_max, KAPPA_TOL))
    mean, kappa2 = g_moments(sigma, kappa1, L_W, q)
    residual = abs(mean - kappa1)
    if residual > RESIDUAL_TOL:
        raise ConvergenceError(f"Fixed-point residual {residual:.3g} at sigma={sigma!r}", last=kappa1)
    logger.debug("Plus branch at sigma=%.10g: kappa1=%.12g kappa2=%.12g", sigma, kappa1, kappa2)
    return StationarySolution(sigma, kappa1, kappa2, "plus", residual=residual)


def scan_fixed_points(sigma: float, L_W: float, spacing: float = 1e-5, k_max: float = K_MAX,
                      q: Optional[Quadrature] = None, chunk: int = 256) -> np.ndarray:
    """
    Positive fixed points located by a dense kappa grid scan of f1(sigma, kappa) - kappa.

    Returns:
        Midpoints of grid cells where xi changes sign from + to -
    """
    _check_sigma(sigma)
    rule = _rule(q, truncation_radius(sigma, k_max))
    x, w = rule.nodes()
    kappas = np.arange(spacing, k_max + spacing / 2, spacing)
    xi = np.empty_like(kappas)
    for start in range(0, kappas.size, chunk):
        k = kappas[start:start + chunk, None]
        log_g = log_density_g(x[None, :], sigma, k, L_W)
        weights = w * np.exp(log_g - log_g.max(axis=1, keepdims=True))
        xi[start:start + chunk] = (weights @ x) / weights.sum(axis=1) - k[:, 0]
    crossings = np.nonzero((xi[:-1] > 0) & (xi[1:] <= 0))[0]
    return 0.5 * (kappas[crossings] + kappas[crossings + 1])


def effective_critical_sigma(sigma_c: float, delta: float, p: int, L_W: float) -> float:
    """sigma_c (1 - delta L_W / (2(p-1)))."""
    return sigma_c * (1.0 - delta * L_W / (2.0 * (p - 1)))


def g_eff(sigma: float, branch: str, delta: float, p: int, L_W: float,
          q: Optional[Quadrature] = None) -> float:
    """Effective coefficient sigma - delta L_W^2 kappa2 / (2(p-1)) of the branch solved at sigma."""
    _check_effective(delta, p)
    kappa2 = solve_branch(sigma, L_W, branch, q).kappa2
    return sigma - effective_coefficient(delta, p, L_W) * kappa2


def _as_effective(nl: StationarySolution, sigma_prime: float, delta: float, p: int, L_W: float,
                  q: Optional[Quadrature]) -> StationarySolution:
    candidate = StationarySolution(sigma_prime, nl.kappa1, nl.kappa2, nl.branch, "Eff", 0.0, nl.sigma)
    residual = effective_residual(candidate, delta, p, L_W, q)
    if residual > EFFECTIVE_RESIDUAL_TOL:
        raise ConvergenceError(f"Effective fixed-point residual {residual:.3g} at sigma'={sigma_prime!r}")
    return StationarySolution(sigma_prime, nl.kappa1, nl.kappa2, nl.branch, "Eff", residual, nl.sigma)


def solve_effective(sigma_prime: float, delta: float, p: int, L_W: float, q: Optional[Quadrature] = None,
                    sigma0: Optional[float] = None,
                    near_critical_floor: float = NEAR_CRITICAL_FLOOR,
                    k_max: float = K_MAX) -> List[StationarySolution]:
    """
    Stationary laws of the effective dynamics with coefficient sigma'.

    Each branch's map sigma -> g_eff(sigma) is increasing, so it is inverted
    by bisection on sigma. Both asymmetric maps tend to g_eff(sigma_c, zero)
    as sigma -> sigma_c, which is where the solution count drops to one.

    Args:
        sigma_prime: Effective diffusion coefficient
        delta, p: Step size and batch size
        L_W: Interaction strength
        q: Quadrature rule
        sigma0: Lower end of the supported nonlinear sigma range
            (default SIGMA0_FRACTION * sigma_c)

    Returns:
        [zero] above the effective critical value, else [zero, plus, minus]

    Raises:
        PreconditionError: sigma' below the supported range
        NearCriticalError: sigma' too close below the transition to solve
    """
    _check_sigma(sigma_prime)
    _check_L_W(L_W)
    _check_effective(delta, p)
    sigma_c = critical_sigma(L_W, q=q)
    sigma0 = SIGMA0_FRACTION * sigma_c if sigma0 is None else sigma0
    c = effective_coefficient(delta, p, L_W)

    def g_zero(sigma):
        return sigma - c * f2(sigma, 0.0, L_W, q)

    def g_plus(sigma):
        return sigma - c * solve_branch(sigma, L_W, "plus", q, k_max, near_critical_floor).kappa2

    supported = g_plus(sigma0)
    if sigma_prime < supported:
        raise PreconditionError(
            f"sigma'={sigma_prime!r} is below the supported range (>= {supported:.6g} for sigma0={sigma0:.6g})"
        )

    lo, hi = expand_bracket(lambda s: g_zero(s) - sigma_prime, sigma0, max(2.0 * sigma_prime, 2.0 * sigma0),
                            floor=sigma0)
    sigma_zero = find_root(lambda s: g_zero(s) - sigma_prime, RootBracket(lo, hi, SIGMA_TOL))
    solutions = [_as_effective(solve_branch(sigma_zero, L_W, "zero", q), sigma_prime, delta, p, L_W, q)]

    transition = g_zero(sigma_c)
    if sigma_prime >= transition:
        logger.debug("sigma'=%.10g above transition %.10g: zero branch only", sigma_prime, transition)
        return solutions

    top = sigma_c - near_critical_floor
    if sigma_prime > g_plus(top):
        raise NearCriticalError(
            f"sigma'={sigma_prime!r} lies within the unsolvable window below the transition {transition:.10g}"
        )
    sigma_plus = find_root(lambda s: g_plus(s) - sigma_prime, RootBracket(sigma0, top, SIGMA_TOL))
    plus = _as_effective(solve_branch(sigma_plus, L_W, "plus", q, k_max, near_critical_floor),
                         sigma_prime, delta, p, L_W, q)
    solutions.extend([plus, plus.negated()])
    return solutions


def effective_residual(solution: StationarySolution, delta: float, p: int, L_W: float,
                       q: Optional[Quadrature] = None) -> float:
    """
    Residual of the effective fixed-point system at sigma' + delta L_W^2 kappa2 / (2(p-1)).

    Returns:
        max(|f1 - kappa1|, |f2 - kappa2|)
    """
    sigma_total = solution.sigma + effective_coefficient(delta, p, L_W) * solution.kappa2
    mean, variance = g_moments(sigma_total, solution.kappa1, L_W, q)
    return max(abs(mean - solution.kappa1), abs(variance - solution.kappa2))


def count_effective_solutions(sigma_prime: float, delta: float, p: int, L_W: float,
                              q: Optional[Quadrature] = None) -> int:
    """Number of effective stationary laws; the unsolvable window just below the transition counts as 3."""
    try:
        return len(solve_effective(sigma_prime, delta, p, L_W, q))
    except NearCriticalError:
        return 3


def locate_effective_transition(delta: float, p: int, L_W: float, lo: float, hi: float,
                                tol: float = 1e-4, q: Optional[Quadrature] = None) -> float:
    """
    Bisection on the solution count of the effective dynamics.

    Args:
        lo: sigma' with three solutions
        hi: sigma' with one solution
        tol: Final bracket width

    Returns:
        Midpoint of the final bracket
    """
    if count_effective_solutions(lo, delta, p, L_W, q) != 3 or count_effective_solutions(hi, delta, p, L_W, q) != 1:
        raise PreconditionError(f"[{lo}, {hi}] does not bracket the effective transition")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count_effective_solutions(mid, delta, p, L_W, q) == 3:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class C0Estimate:
    """Numerical stand-in for the smallness constant: C_lip bounds |d kappa2 / d sigma|."""
    c_lip: float
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"c_lip": self.c_lip, "value": self.value, "threshold": self.threshold, "passed": self.passed}


def c0_estimate(delta: float, p: int, L_W: float, q: Optional[Quadrature] = None,
                sigma0_fraction: float = SIGMA0_FRACTION, grid: int = C_LIP_GRID,
                margin: float = C0_MARGIN) -> C0Estimate:
    """
    Check delta L_W^2 C_lip / (2(p-1)) < margin, with C_lip from finite
    differences of kappa2 over [sigma0, sigma_c) on both branches.
    """
    _check_effective(delta, p)
    sigma_c = critical_sigma(L_W, q=q)
    sigmas = np.linspace(sigma0_fraction * sigma_c, sigma_c * (1.0 - 1e-3), grid)
    c_lip = 0.0
    for branch in ("zero", "plus"):
        kappa2 = np.array([solve_branch(s, L_W, branch, q).kappa2 for s in sigmas])
        c_lip = max(c_lip, float(np.max(np.abs(np.diff(kappa2) / np.diff(sigmas)))))
    value = effective_coefficient(delta, p, L_W) * c_lip
    estimate = C0Estimate(c_lip, value, margin, value < margin)
    logger.info("c0 estimate: C_lip=%.4g, value=%.4g (threshold %g)", c_lip, value, margin)
    return estimate


def branch_table(sigmas: Sequence[float], L_W: float, delta: Optional[float] = None,
                 p: Optional[int] = None, q: Optional[Quadrature] = None,
                 sigma0: Optional[float] = None, k_max: float = K_MAX,
                 near_critical_floor: float = NEAR_CRITICAL_FLOOR) -> pd.DataFrame:
    """
    All stationary solutions over a sigma grid.

    Without (delta, p) the grid is the nonlinear sigma; with them it is the
    effective coefficient sigma'. Points in the near-critical window are
    skipped with a warning.

    Returns:
        DataFrame with columns sigma, branch, model, kappa1, kappa2, residual, nl_sigma
    """
    rows = []
    for sigma in sigmas:
        sigma = float(sigma)
        try:
            if delta is None:
                solutions = [solve_branch(sigma, L_W, "zero", q)]
                if sigma < critical_sigma(L_W, q=q):
                    plus = solve_branch(sigma, L_W, "plus", q, k_max, near_critical_floor)
                    solutions.extend([plus, plus.negated()])
            else:
                solutions = solve_effective(sigma, delta, p, L_W, q, sigma0, near_critical_floor, k_max)
        except NearCriticalError as exc:
            logger.warning("Skipping sigma=%.10g: %s", sigma, exc)
            continue
        rows.extend(s.to_dict() for s in solutions)
    return pd.DataFrame(rows, columns=["sigma", "branch", "model", "kappa1", "kappa2", "residual", "nl_sigma"])


def kurtosis_A(beta: float) -> float:
    """
    E[w] E[X^4 w] / E[X^2 w]^2 with w = exp(-beta (X^2 - 1)^2), X standard normal.

    Equals 3 at beta = 0 and stays below 3 for beta > 0.
    """
    is_valid, error_message = validate_positive(beta, "beta", allow_zero=True)
    if not is_valid:
        raise PreconditionError(error_message)
    rule = DEFAULT_RULE.with_half_width(KURTOSIS_RADIUS)
    m2, m4 = log_density_expectations(
        lambda x: -0.5 * x ** 2 - beta * (x ** 2 - 1.0) ** 2,
        (lambda x: x ** 2, lambda x: x ** 4),
        rule,
    )
    return m4 / m2 ** 2


def kurtosis_beta(sigma: float, L_W: float) -> float:
    """Parameter of kurtosis_A matching g at kappa = 0: ((L_W-1)/sqrt(sigma) + sqrt(((L_W-1)/sqrt(sigma))^2 + 4))^-2."""
    _check_sigma(sigma)
    b = (L_W - 1.0) / math.sqrt(sigma)
    return (b + math.sqrt(b * b + 4.0)) ** -2


def kurtosis_g(sigma: float, L_W: float, q: Optional[Quadrature] = None) -> float:
    """Kurtosis m4 / m2^2 of g at kappa = 0."""
    m2, m4 = symmetric_moments(sigma, L_W, q)
    return m4 / m2 ** 2


def third_kappa_derivative(sigma: float, L_W: float, q: Optional[Quadrature] = None) -> float:
    """d^3 f1 / d kappa^3 at kappa = 0: (L_W/sigma)^3 (m4 - 3 m2^2)."""
    m2, m4 = symmetric_moments(sigma, L_W, q)
    return (L_W / sigma) ** 3 * (m4 - 3.0 * m2 ** 2)


def F1_and_derivative(sigma: float, L_W: float, q: Optional[Quadrature] = None) -> Tuple[float, float]:
    """
    F1(sigma) = L_W E[Y^2] = d f1/d kappa at kappa = 0, and its sigma-derivative
    (L_W/4)(E[Y^2] E[Y^4] - E[Y^6]), for Y with density ∝ exp(-sigma y^4/4 + (1-L_W) y^2/2).

    Returns:
        Tuple of (F1, dF1)
    """
    _check_sigma(sigma)
    _check_L_W(L_W)
    a = 0.5 * (1.0 - L_W)
    rule = _rule(q, quartic_radius(sigma / 4.0, a))
    m2, m4, m6 = log_density_expectations(
        lambda y: a * y ** 2 - 0.25 * sigma * y ** 4,
        (lambda y: y ** 2, lambda y: y ** 4, lambda y: y ** 6),
        rule,
    )
    F1 = L_W * m2
    dF1 = 0.25 * L_W * (m2 * m4 - m6)
    if not dF1 < 0:
        raise NumericalError(f"F1 is not decreasing at sigma={sigma!r}: dF1={dF1!r}")
    return F1, dF1


@dataclass(frozen=True)
class ScalingProbe:
    """kappa1 / sqrt(sigma_c - sigma) along decreasing offsets."""
    offsets: Tuple[float, ...]
    kappa1: Tuple[float, ...]
    ratios: Tuple[float, ...]

    @property
    def spread(self) -> float:
        """Relative spread max/min - 1 of |ratio| over the last three offsets."""
        tail = np.abs(self.ratios[-3:])
        return float(tail.max() / tail.min() - 1.0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"offset": self.offsets, "kappa1": self.kappa1, "ratio": self.ratios})


def sqrt_scaling_probe(L_W: float, offsets: Sequence[float], branch: str = "plus",
                       q: Optional[Quadrature] = None) -> ScalingProbe:
    """
    Ratios kappa1 / sqrt(sigma_c - sigma) for the given offsets sigma_c - sigma.

    Offsets below the near-critical floor are refused by solve_branch.
    """
    if any(o <= 0 for o in offsets):
        raise PreconditionError("Offsets must be positive")
    sigma_c = critical_sigma(L_W, q=q)
    kappa1 = tuple(solve_branch(sigma_c - o, L_W, branch, q).kappa1 for o in offsets)
    ratios = tuple(k / math.sqrt(o) for k, o in zip(kappa1, offsets))
    return ScalingProbe(tuple(float(o) for o in offsets), kappa1, ratios)


def sqrt_scaling_constant(L_W: float, q: Optional[Quadrature] = None) -> float:
    """Predicted limit sqrt(6 F1'(sigma_c) / f1'''(sigma_c, 0)) of the scaling ratios."""
    sigma_c = critical_sigma(L_W, q=q)
    _, dF1 = F1_and_derivative(sigma_c, L_W, q)
    return math.sqrt(6.0 * dF1 / third_kappa_derivative(sigma_c, L_W, q))


def moment_clt_exact(p: int, fourth_moment: float = 1.0) -> float:
    """E Z_p^4 = E X^4 / p + 3(p-1)/p for a normalised sum of p unit-variance iid terms."""
    return fourth_moment / p + 3.0 * (p - 1) / p


CLT_MOMENTS = (1, 2, 3, 4)


def moment_clt_check(p: int, samples: int, stream: RngStream, n_se: float = 3.0) -> pd.DataFrame:
    """
    Moments of Z_p = p^(-1/2) sum X_i with X_i = ±1 equally likely.

    Each Monte-Carlo estimate of E|Z_p|^r is compared with its exact
    finite-p value from the binomial law; the Gaussian limit is listed too.

    Returns:
        DataFrame with columns moment, estimate, std_error, exact, limit, passed
    """
    if not isinstance(p, int) or p < 2:
        raise PreconditionError(f"p must be an integer >= 2, got {p!r}")
    k = np.arange(p + 1)
    pmf = binom.pmf(k, p, 0.5)
    z_values = np.abs(2.0 * k - p) / math.sqrt(p)
    limits = {1: math.sqrt(2.0 / math.pi), 2: 1.0, 3: 2.0 * math.sqrt(2.0 / math.pi), 4: 3.0}

    rows = []
    for r in CLT_MOMENTS:
        estimate = monte_carlo_mean(
            lambda s, size, r=r: (np.abs(2.0 * s.binomial(p, 0.5, size) - p) / math.sqrt(p)) ** r,
            samples, stream,
        )
        exact = moment_clt_exact(p) if r == 4 else float(np.dot(pmf, z_values ** r))
        rows.append({
            "moment": r,
            "estimate": estimate.mean,
            "std_error": estimate.std_error,
            "exact": exact,
            "limit": limits[r],
            "passed": estimate.within(exact, n_se),
        })
    return pd.DataFrame(rows)
