"""Report tables and their CSV / JSON serialization.

CSV files start with ``#`` comment lines (version, command, seed, config
hash, timestamp), then a header row and the data rows. Everything after the
comments depends only on the results, so reruns give identical bodies.
Floats are written with 12 significant digits.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from . import __version__
from .errors import ReportIOError, ValidationError
from .schema import validate

# keys that change where or how results are written, not what they are
NON_SEMANTIC_KEYS = frozenset({"out", "format", "workers"})


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def config_hash(config: dict) -> str:
    """First 16 hex digits of sha256 over the canonical semantic config."""
    semantic = {k: v for k, v in config.items() if k not in NON_SEMANTIC_KEYS and v is not None}
    return hashlib.sha256(canonical_json(semantic).encode()).hexdigest()[:16]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".12g")
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def _json_value(v):
    if hasattr(v, "item") and not isinstance(v, (bool, int, float, str)):
        v = v.item()
    if isinstance(v, float):
        return float(format(v, ".12g")) if math.isfinite(v) else None
    return v


@dataclass
class Report:
    command: str
    columns: list[str]
    rows: list[list]
    config: dict
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValidationError(f"row {row!r} does not match columns {self.columns!r}")

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)


def _timestamp() -> str:
    return os.environ.get("NFAPPROX_TIMESTAMP") or datetime.now(timezone.utc).isoformat(timespec="seconds")


def render_csv(report: Report, timestamp: Optional[str] = None) -> str:
    if not report.rows:
        raise ValidationError("refusing to write an empty report")
    buf = io.StringIO()
    buf.write(f"# nfapprox {__version__}\n")
    buf.write(f"# command: {report.command}\n")
    buf.write(f"# seed: {'' if report.seed is None else report.seed}\n")
    buf.write(f"# config_hash: {report.config_hash}\n")
    buf.write(f"# timestamp: {timestamp or _timestamp()}\n")
    for key in sorted(report.meta):
        buf.write(f"# {key}: {format_value(report.meta[key])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def report_document(report: Report, timestamp: Optional[str] = None) -> dict:
    if not report.rows:
        raise ValidationError("refusing to write an empty report")
    doc = {
        "command": report.command,
        "version": __version__,
        "config_hash": report.config_hash,
        "seed": report.seed,
        "timestamp": timestamp or _timestamp(),
        "columns": list(report.columns),
        "rows": [[_json_value(v) for v in row] for row in report.rows],
        "meta": {k: _json_value(v) for k, v in report.meta.items()},
    }
    validate(doc, "report")
    return doc


def render_json(report: Report, timestamp: Optional[str] = None) -> str:
    return json.dumps(report_document(report, timestamp), indent=2, allow_nan=False) + "\n"


def render(report: Report, fmt: str = "csv") -> str:
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json":
        return render_json(report)
    raise ValidationError(f"unknown report format {fmt!r}")


def emit_report(report: Report, path: Optional[str | Path], fmt: str = "csv") -> Optional[Path]:
    """Write the report; ``path`` may be a directory, a file, or None for stdout.

    A directory receives ``<command>.<fmt>``.
    """
    text = render(report, fmt)
    if path is None:
        import sys

        sys.stdout.write(text)
        return None
    target = Path(path)
    if target.is_dir() or str(path).endswith(os.sep) or not target.suffix:
        target = target / f"{report.command}.{fmt}"
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {target}: {exc.strerror or exc}", path=str(target)) from exc
    return target


def read_csv_body(text: str) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a CSV report, ignoring the comment lines."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def load_json_report(text: str) -> dict:
    doc = json.loads(text)
    validate(doc, "report")
    return doc

