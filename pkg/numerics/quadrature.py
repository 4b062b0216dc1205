"""
Composite Gauss-Legendre quadrature on truncated real lines.

All density integrals of the stationary analysis go through this module. The
real line is truncated to [-R, R]; the radius either comes with the rule or is
chosen per density by `truncation_radius`.
"""

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from utils.validators import validate_quadrature_rule
from .errors import NonFiniteError, PreconditionError, VanishingMassError

logger = logging.getLogger(__name__)

DEFAULT_PANELS = 64
DEFAULT_POINTS = 32
SCHEME_TAG = "composite-gauss-legendre"
MIN_MASS = 1e-300


@lru_cache(maxsize=16)
def _reference_rule(points: int) -> Tuple[np.ndarray, np.ndarray]:
    t, w = leggauss(points)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


@lru_cache(maxsize=64)
def _composite_rule(a: float, b: float, panels: int, points: int) -> Tuple[np.ndarray, np.ndarray]:
    t, wt = _reference_rule(points)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    w = (half[:, None] * wt[None, :]).ravel()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class Quadrature:
    """
    Composite Gauss-Legendre rule.

    `half_width=None` means the radius is picked per integrand by the caller
    (see `truncation_radius`); `integrate` requires an explicit radius.
    """
    half_width: Optional[float] = None
    panels: int = DEFAULT_PANELS
    points: int = DEFAULT_POINTS
    scheme: str = SCHEME_TAG

    def __post_init__(self):
        is_valid, error_message = validate_quadrature_rule(self.half_width, self.panels, self.points)
        if not is_valid:
            raise PreconditionError(error_message)

    @property
    def node_count(self) -> int:
        return self.panels * self.points

    def with_half_width(self, half_width: float) -> "Quadrature":
        return replace(self, half_width=float(half_width))

    def refined(self) -> "Quadrature":
        """Same rule with twice as many panels."""
        return replace(self, panels=2 * self.panels)

    def nodes(self, a: Optional[float] = None, b: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nodes and weights on [a, b], defaulting to [-R, R].

        Returns:
            Tuple of (nodes, weights) as read-only arrays
        """
        if a is None or b is None:
            if self.half_width is None:
                raise PreconditionError("Quadrature has no half_width; pass explicit bounds")
            a, b = -self.half_width, self.half_width
        return _composite_rule(float(a), float(b), self.panels, self.points)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "half_width": self.half_width,
            "panels": self.panels,
            "points": self.points,
            "node_count": self.node_count,
        }


def truncation_radius(sigma: float, kappa: float = 0.0) -> float:
    """R = max(6, 4*(1+sigma)^(1/2) + |kappa| + 2); the truncated mass is below 1e-14."""
    return max(6.0, 4.0 * np.sqrt(1.0 + sigma) + abs(kappa) + 2.0)


def quartic_radius(quartic: float, quadratic: float, margin: float = 50.0) -> float:
    """
    Radius beyond which exp(quadratic*x^2 - quartic*x^4) has dropped by e^-margin
    from its maximum.

    Args:
        quartic: Coefficient of -x^4 (positive)
        quadratic: Coefficient of +x^2 (any sign)
        margin: Log drop below the peak

    Returns:
        Radius R > 0
    """
    if quartic <= 0:
        raise PreconditionError(f"Quartic coefficient must be positive, got {quartic}")
    peak = quadratic ** 2 / (4.0 * quartic) if quadratic > 0 else 0.0
    c = margin + peak
    y = (quadratic + np.sqrt(quadratic ** 2 + 4.0 * quartic * c)) / (2.0 * quartic)
    return float(np.sqrt(y))


def _check_finite(values: np.ndarray, x: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(values)
    if np.any(bad):
        node = float(x[np.argmax(bad)])
        raise NonFiniteError(f"Non-finite {what} at node x={node!r}")


def integrate(f: Callable[[np.ndarray], np.ndarray], q: Quadrature) -> float:
    """
    Integrate a vectorised function over [-R, R].

    Args:
        f: Function accepting an array of nodes
        q: Quadrature rule with an explicit half_width

    Returns:
        Composite Gauss-Legendre approximation of the integral
    """
    x, w = q.nodes()
    values = np.asarray(f(x), dtype=float) * np.ones_like(x)
    _check_finite(values, x, "integrand")
    return float(np.dot(w, values))


def integrate_interval(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                       panels: int = DEFAULT_PANELS, points: int = DEFAULT_POINTS) -> float:
    """Integrate a vectorised function over [a, b]."""
    if not b > a:
        raise PreconditionError(f"Empty interval [{a}, {b}]")
    x, w = _composite_rule(float(a), float(b), panels, points)
    values = np.asarray(f(x), dtype=float) * np.ones_like(x)
    _check_finite(values, x, "integrand")
    return float(np.dot(w, values))


def log_density_expectations(log_density: Callable[[np.ndarray], np.ndarray],
                             integrands: Sequence[Callable[[np.ndarray], np.ndarray]],
                             q: Quadrature,
                             a: Optional[float] = None,
                             b: Optional[float] = None) -> Tuple[float, ...]:
    """
    Expectations of several functions under an unnormalised density given in log form.

    The log density is shifted by its maximum over the nodes before
    exponentiation, so very peaked densities do not underflow.

    Args:
        log_density: Vectorised log of the unnormalised density
        integrands: Functions h whose expectations E[h] are wanted
        q: Quadrature rule
        a, b: Optional explicit interval (defaults to [-R, R])

    Returns:
        Tuple of expectations, one per integrand
    """
    x, w = q.nodes(a, b)
    log_values = np.asarray(log_density(x), dtype=float)
    if np.any(np.isnan(log_values)) or np.any(log_values == np.inf):
        _check_finite(np.where(log_values == -np.inf, 0.0, log_values), x, "log density")
    shift = np.max(log_values)
    weights = w * np.exp(log_values - shift)
    mass = float(np.sum(weights))
    if not mass > MIN_MASS:
        raise VanishingMassError(f"Density mass {mass!r} vanished after max-shift")

    results = []
    for h in integrands:
        values = np.asarray(h(x), dtype=float) * np.ones_like(x)
        _check_finite(values, x, "integrand")
        results.append(float(np.dot(weights, values)) / mass)
    return tuple(results)
