"""Numerics package initialization."""
from .errors import (
    RbmPhaseError,
    ConfigError,
    PreconditionError,
    SupercriticalError,
    NearCriticalError,
    NumericalError,
    NoSignChangeError,
    ConvergenceError,
    NonFiniteError,
    NonStochasticError,
    RateRangeError,
    VanishingMassError
)
from .special import log_binomial, positive_part
from .quadrature import (
    Quadrature,
    integrate,
    integrate_interval,
    log_density_expectations,
    truncation_radius,
    quartic_radius
)
from .roots import (
    RootBracket,
    RootResult,
    find_root,
    solve_bracketed,
    expand_bracket,
    golden_section_max
)
from .markov import PowerIterationResult, power_iterate, check_stochastic
from .rng import RngStream, gaussian, binomial, uniform_index, stream_from_seed
from .montecarlo import MonteCarloEstimate, monte_carlo_mean, batch_means

__all__ = [
    'RbmPhaseError',
    'ConfigError',
    'PreconditionError',
    'SupercriticalError',
    'NearCriticalError',
    'NumericalError',
    'NoSignChangeError',
    'ConvergenceError',
    'NonFiniteError',
    'NonStochasticError',
    'RateRangeError',
    'VanishingMassError',
    'log_binomial',
    'positive_part',
    'Quadrature',
    'integrate',
    'integrate_interval',
    'log_density_expectations',
    'truncation_radius',
    'quartic_radius',
    'RootBracket',
    'RootResult',
    'find_root',
    'solve_bracketed',
    'expand_bracket',
    'golden_section_max',
    'PowerIterationResult',
    'power_iterate',
    'check_stochastic',
    'RngStream',
    'gaussian',
    'binomial',
    'uniform_index',
    'stream_from_seed',
    'MonteCarloEstimate',
    'monte_carlo_mean',
    'batch_means'
]
