"""
Result writer for CLI tables and reports.
Handles CSV/JSON emission with a reproducible metadata header.
"""

import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

from numerics.errors import PreconditionError
from utils.run_id import canonical_params, generate_run_id
from .schema import TABLES, VERSION

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
FLOAT_FORMAT = "%.17g"


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "item"):
        return _json_safe(value.item())
    return value


class ResultStore:
    """Writes one output per invocation; no timestamps, so bytes depend only on inputs."""

    def __init__(self, out_path: Optional[str] = None, fmt: str = "csv", subcommand: str = ""):
        """
        Args:
            out_path: Destination file (None writes to standard output)
            fmt: "csv" or "json"
            subcommand: CLI subcommand recorded in the run ID
        """
        if fmt not in FORMATS:
            raise PreconditionError(f"Unknown output format {fmt!r}; choose one of {', '.join(FORMATS)}")
        self.out_path = Path(out_path) if out_path else None
        self.fmt = fmt
        self.subcommand = subcommand

    def _meta(self, name: str, params: Dict, extra: Optional[Dict]) -> Dict:
        meta = {
            "table": name,
            "version": VERSION,
            "run_id": generate_run_id(self.subcommand or name, params),
            "params": params,
        }
        if extra:
            meta.update(extra)
        return meta

    def _emit(self, text: str) -> None:
        if self.out_path is None:
            sys.stdout.write(text)
            return
        try:
            self.out_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.out_path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        except OSError as e:
            raise PreconditionError(f"Cannot write {self.out_path}: {e}")
        logger.info("Wrote %s (%d bytes)", self.out_path, len(text))

    def render_table(self, name: str, frame: pd.DataFrame, params: Dict,
                     extra_meta: Optional[Dict] = None) -> str:
        """Rendered CSV or JSON text of a table, validated against its schema."""
        if name not in TABLES:
            raise PreconditionError(f"Unknown table {name!r}")
        schema = TABLES[name]
        is_valid, error_message = schema.check(frame.columns)
        if not is_valid:
            raise PreconditionError(f"Table {name}: {error_message}")
        frame = frame[schema.order(frame.columns)]
        meta = self._meta(name, params, extra_meta)

        if self.fmt == "json":
            rows = [{k: _json_safe(v) for k, v in row.items()} for row in frame.to_dict(orient="records")]
            payload = {"meta": {k: _json_safe(v) for k, v in meta.items()}, "rows": rows}
            return json.dumps(payload, sort_keys=True, indent=2, default=_json_safe) + "\n"

        buffer = io.StringIO()
        header = f"# rbm-phase {VERSION} run={meta['run_id']} params={canonical_params(params)}"
        if extra_meta:
            header += f" meta={canonical_params(extra_meta)}"
        buffer.write(header + "\n")
        frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()

    def write_table(self, name: str, frame: pd.DataFrame, params: Dict,
                    extra_meta: Optional[Dict] = None) -> str:
        """
        Write a table.

        Args:
            name: Key of results.schema.TABLES
            frame: Table rows
            params: Full parameter map of the run
            extra_meta: Additional metadata (e.g. quadrature settings)

        Returns:
            The run ID
        """
        self._emit(self.render_table(name, frame, params, extra_meta))
        return generate_run_id(self.subcommand or name, params)

    def write_report(self, name: str, payload: Dict, params: Dict) -> str:
        """Write a JSON report (always JSON, whatever the table format)."""
        document = {"meta": self._meta(name, params, None), "report": payload}
        self._emit(json.dumps(document, sort_keys=True, indent=2, default=_json_safe) + "\n")
        return document["meta"]["run_id"]
