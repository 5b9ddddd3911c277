"""Plain-text serialization: field CSV, JSON Lines, manifests."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .geometry import HeightField


def _num(x):
    """JSON-safe scalar; non-finite floats become strings so records stay valid JSON."""
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_num(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    return x


def dumps(record: dict) -> str:
    """Canonical one-line JSON (sorted keys, repr-exact floats)."""
    return json.dumps(_num(record), sort_keys=True, separators=(",", ":"))


def write_jsonl(path, records) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")
    return path


def read_jsonl(path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_columns_csv(path, header, rows) -> Path:
    """CSV with a header row; floats written with 17 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")
    return path


def write_field_csv(path, field: HeightField) -> Path:
    """One ``angle,value`` pair per line, 17 significant digits, no header."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for th, h in zip(field.theta, field.values):
            fh.write(f"{th:.17g},{h:.17g}\n")
    return path


def read_field_csv(path) -> HeightField:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return HeightField(data[:, 1])


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(dumps(config).encode()).hexdigest()[:16]
