"""Deterministic CSV/JSON artifacts and the flat key=value config format.

Two runs with the same config and seed must produce byte-identical data
files: floats are always written with 17 significant digits, JSON keys are
sorted, and every JSON report embeds the config, the seed and a version
string. The wall-clock runtime is also embedded but lives in a dedicated
key so consumers can strip it before comparing reports.
"""

from __future__ import annotations

import json
import os
import time
from contextlib import contextmanager

import numpy as np

from . import __version__
from .errors import ParameterError

RUNTIME_KEY = "runtime_seconds"


def format_float(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path, columns: dict) -> None:
    """Write named columns (equal-length sequences) as a CSV file."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays):
        raise ParameterError("CSV columns must have equal length")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(format_float(a[i]) for a in arrays) + "\n")


def read_csv(path) -> dict:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_report(path, payload: dict, config: dict, seed: int | None,
                 runtime: float) -> None:
    """JSON report with the reproducibility envelope."""
    doc = dict(payload)
    doc["meta"] = {
        "config": _plain(config),
        "seed": seed,
        "version": __version__,
        RUNTIME_KEY: round(runtime, 6),
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_plain(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and obj != obj:  # NaN has no JSON spelling
        return None
    return obj


def strip_runtime(report: dict) -> dict:
    out = json.loads(json.dumps(report))
    out.get("meta", {}).pop(RUNTIME_KEY, None)
    return out


@contextmanager
def timed():
    box = {}
    start = time.perf_counter()
    try:
        yield box
    finally:
        box["elapsed"] = time.perf_counter() - start


def parse_config_file(path) -> dict:
    """Flat key=value lines; '#' starts a comment; values stay strings
    (the consumer casts against its schema)."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def coerce(value: str, like):
    """Cast a config-file string to the type of a default value."""
    if isinstance(like, bool):
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ParameterError(f"expected a boolean, got {value!r}")
    if like is None or isinstance(like, float):
        return float(value)
    if isinstance(like, int):
        return int(value)
    return value
