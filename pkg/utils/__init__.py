"""Utils package initialization."""
from .validators import (
    validate_spin_count,
    validate_batch_size,
    validate_beta,
    validate_positive,
    validate_magnetization,
    validate_probability,
    validate_seed,
    validate_bracket,
    validate_quadrature_rule,
    validate_scheme,
    validate_branch
)
from .run_id import canonical_params, generate_run_id, validate_run_id_format
from .config import load_config, check_config, get_setting

__all__ = [
    'validate_spin_count',
    'validate_batch_size',
    'validate_beta',
    'validate_positive',
    'validate_magnetization',
    'validate_probability',
    'validate_seed',
    'validate_bracket',
    'validate_quadrature_rule',
    'validate_scheme',
    'validate_branch',
    'canonical_params',
    'generate_run_id',
    'validate_run_id_format',
    'load_config',
    'check_config',
    'get_setting'
]
