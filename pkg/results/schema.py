"""
Column layout of every table the CLI emits.
Each table has required columns in a fixed order, then optional ones.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

VERSION = "0.1.0"


@dataclass(frozen=True)
class TableSchema:
    """Ordered required columns followed by optional ones."""
    required: Tuple[str, ...]
    optional: Tuple[str, ...] = ()

    def order(self, columns: Iterable[str]) -> List[str]:
        """Schema order of the given columns; required first, then present optionals."""
        present = set(columns)
        return list(self.required) + [c for c in self.optional if c in present]

    def check(self, columns: Iterable[str]) -> Tuple[bool, str]:
        """
        Validate a column set against the schema.

        Returns:
            Tuple of (is_valid, error_message)
        """
        present = list(columns)
        missing = [c for c in self.required if c not in present]
        if missing:
            return False, f"missing columns {missing}"

        unknown = [c for c in present if c not in self.required and c not in self.optional]
        if unknown:
            return False, f"unexpected columns {unknown}"

        return True, ""


TABLES: Dict[str, TableSchema] = {
    # cw-probs
    "cw_rates": TableSchema(
        ("m", "right_theoretical", "left_theoretical"),
        ("right_empirical", "left_empirical"),
    ),
    # cw-invariant
    "cw_invariant": TableSchema(("beta", "p", "m", "probability", "iterations")),
    # cw-critical
    "cw_critical": TableSchema(
        ("p", "beta_c", "beta_c_asymptotic", "g_p_at_1", "g_p_at_asymptotic"),
        ("g_p_at_1_mc", "g_p_at_1_se", "g_p_at_asymptotic_mc", "g_p_at_asymptotic_se"),
    ),
    # ips-run
    "ips_trajectory": TableSchema(("step", "time", "mean", "variance", "diffusion_coefficient")),
    # stationary
    "stationary_branches": TableSchema(("sigma", "branch", "model", "kappa1", "kappa2", "residual", "nl_sigma")),
    # verify
    "verify_report": TableSchema(("check", "value", "expected", "passed")),
}
