"""CSV/JSON writers that embed provenance.

CSV files start with ``# key: value`` comment lines followed by a header row.
Nothing time-dependent is written, so identical runs give identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


def _plain(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, Mapping):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _fmt(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def write_csv(path, rows: Iterable[Mapping], columns: Sequence[str], provenance: Mapping | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for k, v in (provenance or {}).items():
            fh.write(f"# {k}: {json.dumps(_plain(v), sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """Inverse of :func:`write_csv`: ``(provenance, rows)`` with string values."""
    prov, body = {}, []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                prov[key] = json.loads(val)
            else:
                body.append(line)
    return prov, list(csv.DictReader(body))


def write_json(path, payload: Mapping, provenance: Mapping | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"provenance": _plain(provenance or {}), **_plain(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
