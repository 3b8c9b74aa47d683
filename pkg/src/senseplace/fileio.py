"""CSV and PGM serialization.

All text outputs are UTF-8 with LF line endings; floats are written with
17 significant digits so a reload is bit-identical. Writes go through a
temp file in the target directory followed by an atomic rename.
"""

from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format_float(value)


def atomic_write_text(path, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_matrix_csv(path, matrix) -> None:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = [",".join(format_float(v) for v in row) for row in m]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_matrix_csv(path, header: bool = False) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot open {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"cannot parse {path} as a numeric CSV matrix: {exc}") from exc
    if data.size == 0:
        raise ConfigError(f"{path} holds an empty matrix")
    return data


def load_coordinates_csv(path, x_column: str, y_column: str, z_column: str | None = None) -> np.ndarray:
    """Read named coordinate columns from a headered CSV table."""
    wanted = [x_column, y_column] + ([z_column] if z_column else [])
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise ConfigError(f"{path} is empty")
            header = [h.strip() for h in header]
            missing = [c for c in wanted if c not in header]
            if missing:
                raise ConfigError(f"{path} lacks columns {missing}; found {header}")
            cols = [header.index(c) for c in wanted]
            rows = []
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    rows.append([float(row[c]) for c in cols])
                except (ValueError, IndexError) as exc:
                    raise ConfigError(f"{path}:{line_no}: bad coordinate row: {exc}")
    except OSError as exc:
        raise ConfigError(f"cannot open {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path} holds no coordinate rows")
    return np.asarray(rows, dtype=float)


def write_rows_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_format_cell(cell) for cell in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_pgm16(path, values, height: int, width: int) -> None:
    """16-bit ASCII graymap, linearly scaled so min maps to 0 and max to 65535.

    The applied scale is recorded in a comment line; a constant field has
    no dynamic range and is written as all zeros.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size != height * width:
        raise ConfigError(f"expected {height * width} values for a {height}x{width} graymap")
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        scaled = np.rint((v - lo) / (hi - lo) * 65535).astype(int)
    else:
        scaled = np.zeros(v.size, dtype=int)
    lines = [
        "P2",
        f"# scale min={format_float(lo)} max={format_float(hi)}",
        f"{width} {height}",
        "65535",
    ]
    grid = scaled.reshape(height, width)
    lines.extend(" ".join(str(int(x)) for x in row) for row in grid)
    atomic_write_text(path, "\n".join(lines) + "\n")
