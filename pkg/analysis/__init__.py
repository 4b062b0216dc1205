"""Analysis package initialization."""
from . import curie_weiss, mean_field_limit, particle_sim, stationary, verification
from .verification import SUITES, run_suite

__all__ = [
    'curie_weiss',
    'mean_field_limit',
    'particle_sim',
    'stationary',
    'verification',
    'SUITES',
    'run_suite'
]
