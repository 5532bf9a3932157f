"""Bit-exact binary matrix I/O plus a CSV interchange format.

Binary layout (`.mat0`): 8-byte magic, u32 version, then u64 rows, u64 cols,
u64 n1, u64 n2, followed by row-major little-endian float64 payload.  The two
group-size words are zero for matrices without a group split (statistic
matrices, basis dumps).  Binary round-trips are bit-exact.

CSV: one header row `v,n,n1,n2` followed by `v` data rows; values are written
with 17 significant digits so float64 round-trips exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DataFormatError, UsageError
from .model import DataMatrix

MAGIC = b"RMXMAT0\x00"
VERSION = 1
_HEADER = struct.Struct("<8sIQQQQ")

PathLike = Union[str, Path]


def write_array(a: np.ndarray, path: PathLike, n1: int = 0, n2: int = 0) -> None:
    """Write a bare 2-D float64 array; group sizes default to 0 (no split)."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise UsageError(f"can only store 2-D matrices, got shape {a.shape}")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, a.shape[0], a.shape[1], n1, n2))
        f.write(a.astype("<f8", copy=False).tobytes(order="C"))


def read_array(path: PathLike) -> tuple[np.ndarray, int, int]:
    """Read a binary matrix; returns (array, n1, n2) with n1=n2=0 for bare arrays."""
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise DataFormatError(
                f"{path}: truncated header, got {len(header)} of {_HEADER.size} bytes"
            )
        magic, version, rows, cols, n1, n2 = _HEADER.unpack(header)
        if magic != MAGIC:
            raise DataFormatError(f"{path}: bad magic {magic!r} at byte offset 0")
        if version != VERSION:
            raise DataFormatError(f"{path}: unsupported version {version} at byte offset 8")
        if rows < 1 or cols < 1:
            raise DataFormatError(
                f"{path}: empty dimensions {rows}x{cols} in header at byte offset 12"
            )
        payload = f.read(rows * cols * 8 + 1)
    if len(payload) != rows * cols * 8:
        expected = rows * cols * 8
        raise DataFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"for {rows}x{cols} (mismatch at byte offset {_HEADER.size + min(len(payload), expected)})"
        )
    a = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
    bad = np.argwhere(~np.isfinite(a))
    if bad.size:
        r, c = bad[0]
        offset = _HEADER.size + (r * cols + c) * 8
        raise DataFormatError(
            f"{path}: non-finite entry at row {r}, column {c} (byte offset {offset})"
        )
    return a.astype(np.float64), int(n1), int(n2)


def write_matrix(x: DataMatrix, path: PathLike) -> None:
    """Write a data matrix with its group split."""
    write_array(x.values, path, n1=x.n1, n2=x.n2)


def read_matrix(path: PathLike) -> DataMatrix:
    """Read a data matrix; the header must carry a valid group split."""
    a, n1, n2 = read_array(path)
    if n1 == 0 and n2 == 0:
        raise DataFormatError(
            f"{path}: header carries no group split (n1=n2=0); "
            f"this file stores a bare matrix, not subject data"
        )
    try:
        return DataMatrix(a, n1, n2)
    except UsageError as e:
        raise DataFormatError(f"{path}: {e}") from e


def write_matrix_csv(x: DataMatrix, path: PathLike) -> None:
    v, n = x.values.shape
    with open(path, "w") as f:
        f.write(f"{v},{n},{x.n1},{x.n2}\n")
        for row in x.values:
            f.write(",".join(format(val, ".17g") for val in row))
            f.write("\n")


def read_matrix_csv(path: PathLike) -> DataMatrix:
    with open(path) as f:
        header = f.readline().strip()
        parts = header.split(",")
        if len(parts) != 4:
            raise DataFormatError(
                f"{path}: header row must be 'v,n,n1,n2', got {header!r}"
            )
        try:
            v, n, n1, n2 = (int(p) for p in parts)
        except ValueError as e:
            raise DataFormatError(f"{path}: non-integer header field in {header!r}") from e
        if v < 1:
            raise DataFormatError(f"{path}: header voxel count {v} must be >= 1")
        values = np.empty((v, n), dtype=np.float64)
        for r in range(v):
            line = f.readline()
            if not line:
                raise DataFormatError(f"{path}: expected {v} data rows, file ends at row {r}")
            cells = line.strip().split(",")
            if len(cells) != n:
                raise DataFormatError(
                    f"{path}: row {r + 1} has {len(cells)} cells, expected {n}"
                )
            for c, cell in enumerate(cells):
                try:
                    val = float(cell)
                except ValueError as e:
                    raise DataFormatError(
                        f"{path}: unparseable cell at row {r + 1}, column {c + 1}: {cell!r}"
                    ) from e
                if not np.isfinite(val):
                    raise DataFormatError(
                        f"{path}: non-finite cell at row {r + 1}, column {c + 1}: {cell!r}"
                    )
                values[r, c] = val
        if f.readline().strip():
            raise DataFormatError(f"{path}: trailing data after {v} rows")
    try:
        return DataMatrix(values, n1, n2)
    except UsageError as e:
        raise DataFormatError(f"{path}: {e}") from e


def load_matrix(path: PathLike) -> DataMatrix:
    """Dispatch on extension: .csv goes through the text reader, else binary."""
    if str(path).lower().endswith(".csv"):
        return read_matrix_csv(path)
    return read_matrix(path)
