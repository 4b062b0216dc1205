"""
Deterministic run identifiers.
Generates IDs in format: RBM-XXXXXXXX (e.g., RBM-3fa9c01e)
"""

import hashlib
import json
import re


def canonical_params(params: dict) -> str:
    """Parameter map as compact JSON with sorted keys."""
    return json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)


def generate_run_id(subcommand: str, params: dict) -> str:
    """
    Generate a run ID from the subcommand and its parameters.

    Identical invocations get identical IDs, so the ID can be written into
    output files without breaking byte-for-byte reproducibility.

    Args:
        subcommand: CLI subcommand name
        params: Full parameter map of the run

    Returns:
        Run ID string
    """
    digest = hashlib.sha256(f"{subcommand}|{canonical_params(params)}".encode("utf-8")).hexdigest()

    # Format: RBM-XXXXXXXX (first 8 hex digits of the digest)
    return f"RBM-{digest[:8]}"


def validate_run_id_format(run_id: str) -> bool:
    """
    Validate that a run ID follows the correct format.

    Args:
        run_id: ID string to validate

    Returns:
        True if valid format, False otherwise
    """
    pattern = r'^RBM-[0-9a-f]{8}$'
    return bool(re.match(pattern, run_id))
