"""Binary grid files, CSV text bridging and dataset manifests."""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PHZ1"
_HEADER = struct.Struct("<4sII")


class GridFormatError(ValueError):
    """Base class for unreadable grid files."""

    code = "format"


class BadMagicError(GridFormatError):
    code = "bad-magic"


class TruncatedError(GridFormatError):
    code = "truncated"


class EmptyGridError(GridFormatError):
    code = "empty"


def encode_grid(grid) -> bytes:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError(f"expected a 2D grid, got shape {g.shape}")
    if g.size == 0:
        raise EmptyGridError("refusing to write an empty grid")
    if not np.all(np.isfinite(g)):
        raise ValueError("grid contains non-finite values")
    return _HEADER.pack(MAGIC, g.shape[0], g.shape[1]) + np.ascontiguousarray(g, dtype="<f8").tobytes()


def decode_grid(raw: bytes) -> np.ndarray:
    if len(raw) < _HEADER.size:
        if len(raw) >= 4 and raw[:4] != MAGIC:
            raise BadMagicError(f"bad magic {raw[:4]!r}")
        raise TruncatedError(f"header needs {_HEADER.size} bytes, got {len(raw)}")
    magic, h, w = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if h == 0 or w == 0:
        raise EmptyGridError(f"grid dimensions {h}x{w}")
    need = 8 * h * w
    payload = raw[_HEADER.size :]
    if len(payload) < need:
        raise TruncatedError(f"payload has {len(payload)} bytes, expected {need}")
    if len(payload) > need:
        raise GridFormatError(f"{len(payload) - need} trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f8").reshape(h, w).astype(np.float64)


def write_grid(path, grid) -> None:
    path = Path(path)
    data = encode_grid(grid)
    # write-then-rename so readers never see a half-written file
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def read_grid(path) -> np.ndarray:
    return decode_grid(Path(path).read_bytes())


def export_csv(grid) -> str:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError(f"expected a 2D grid, got shape {g.shape}")
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in g)


def import_csv(text: str) -> np.ndarray:
    rows = [line.split(",") for line in text.splitlines() if line.strip()]
    if not rows:
        raise EmptyGridError("no rows in CSV text")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"ragged CSV: row {i} has {len(row)} fields, expected {width}")
    return np.array([[float(v) for v in row] for row in rows], dtype=np.float64)


def write_manifest(path, rows: list[dict], columns: list[str] | None = None) -> None:
    """UTF-8 text manifest: a header line, then one comma-separated line per entry."""
    if not rows:
        raise ValueError("manifest needs at least one row")
    columns = list(columns or rows[0].keys())
    lines = [",".join(columns)]
    for row in rows:
        cells = [str(row.get(c, "")) for c in columns]
        if any("," in c or "\n" in c for c in cells):
            raise ValueError(f"manifest values may not contain commas or newlines: {cells}")
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty manifest")
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:] if line]
