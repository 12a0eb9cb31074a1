"""Deterministic CSV/JSON emission and config loading."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ConfigError(ValueError):
    """Malformed or incomplete configuration (maps to the usage exit code)."""


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, non-finite floats as null, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ""
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def load_config(path: str | Path) -> dict:
    """Read a JSON object; parse errors carry line and column."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def parse_grid(spec, name: str = "x") -> np.ndarray:
    """A strictly increasing grid from a list or from ``{"geom" | "linear": [start, stop, num]}``."""
    if isinstance(spec, dict):
        if len(spec) != 1 or next(iter(spec)) not in ("geom", "linear"):
            raise ConfigError(f"{name}: grid object must be {{'geom': [a, b, n]}} or {{'linear': [a, b, n]}}")
        kind, args = next(iter(spec.items()))
        if not (isinstance(args, list) and len(args) == 3):
            raise ConfigError(f"{name}: {kind} needs [start, stop, num]")
        start, stop, num = float(args[0]), float(args[1]), int(args[2])
        if num < 1:
            raise ConfigError(f"{name}: grid is empty")
        if kind == "geom":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{name}: geometric grid needs positive endpoints")
            grid = np.geomspace(start, stop, num)
        else:
            grid = np.linspace(start, stop, num)
    elif isinstance(spec, (list, tuple)):
        try:
            grid = np.array([float(v) for v in spec])
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: grid entries must be numbers") from None
    elif isinstance(spec, (int, float)) and not isinstance(spec, bool):
        grid = np.array([float(spec)])
    else:
        raise ConfigError(f"{name}: expected a number, a list or a grid object")
    if grid.size == 0:
        raise ConfigError(f"{name}: grid is empty")
    if not np.all(np.isfinite(grid)):
        raise ConfigError(f"{name}: grid entries must be finite")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError(f"{name}: grid must be strictly increasing")
    return grid
