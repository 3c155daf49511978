"""Deterministic text output: round-trip floats, sorted JSON, provenance headers."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math

import numpy as np

CSV_SCHEMA_VERSION = 1


def fmt_float(x) -> str:
    """Shortest decimal string that parses back to the same double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan; keep them readable and parseable by json.loads
        return x if math.isfinite(x) else fmt_float(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def config_hash(config: dict) -> str:
    canon = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def csv_text(columns, rows, provenance: dict | None = None) -> str:
    """CSV with optional ``# key=value`` provenance comment lines on top."""
    buf = io.StringIO()
    if provenance:
        for k in sorted(provenance):
            buf.write(f"# {k}={provenance[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    if columns:
        w.writerow(columns)
    for r in rows:
        w.writerow([fmt_cell(v) for v in r])
    return buf.getvalue()


def read_csv(text: str) -> tuple[dict, list[list[str]]]:
    """Split provenance comments from CSV rows."""
    prov, lines = {}, []
    for line in text.splitlines():
        if line.startswith("# ") and "=" in line:
            k, v = line[2:].split("=", 1)
            prov[k] = v
        else:
            lines.append(line)
    return prov, list(csv.reader(lines))
