"""Text output: CSV tables with fixed float formatting and JSON side files."""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__

FLOAT_DIGITS = 12


def fmt(value: Any) -> str:
    """One CSV field. Floats get 12 significant digits so reruns are byte-identical."""
    if value is None:
        return ""
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.{FLOAT_DIGITS}g}"
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def manifest(config: Any, wall_clock: float, cells: int, errors: Sequence[dict],
             outputs: Sequence[str | Path], **extra: Any) -> dict:
    return {
        "tool": "dualjc",
        "version": __version__,
        "config": config,
        "wall_clock_s": round(wall_clock, 3),
        "cells": cells,
        "errors": list(errors),
        "outputs": [str(p) for p in outputs],
        **extra,
    }


def write_density(path: str | Path, rho: np.ndarray) -> Path:
    """Density operator as (row, col, re, im) records in row-major order."""
    rho = np.asarray(rho)
    rows = ((i, j, rho[i, j].real, rho[i, j].imag)
            for i in range(rho.shape[0]) for j in range(rho.shape[1]))
    return write_csv(path, ("row", "col", "re", "im"), rows)


def read_density(path: str | Path) -> np.ndarray:
    _, rows = read_csv(path)
    n = int(math.isqrt(len(rows)))
    out = np.zeros((n, n), dtype=complex)
    for i, j, re, im in rows:
        out[int(i), int(j)] = complex(float(re), float(im))
    return out


def write_wigner(path: str | Path, grid) -> Path:
    """Wigner grid as (x, p, W) records, p varying slowest."""
    rows = ((x, p, grid.values[i, j]) for i, p in enumerate(grid.p) for j, x in enumerate(grid.x))
    return write_csv(path, ("x", "p", "W"), rows)
