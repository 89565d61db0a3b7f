"""Activation file formats.

CSV: one neuron per row, comma separated, no header, ``#`` comment lines.

Binary (``.smat``)::

    offset  size  field
    0       4     magic b"SMAT"
    4       4     version, uint32 LE (= 1)
    8       8     rows, uint64 LE
    16      8     cols, uint64 LE
    24      ...   rows*cols float64 LE, row-major
"""
from __future__ import annotations

import csv
import os
import struct

import numpy as np

from .errors import DegenerateNeuronError, FormatError, InvalidInputError, ParseError
from .geometry import ZERO_POLICIES

MAGIC = b"SMAT"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def load_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            cells = next(csv.reader([text]))
            try:
                values = [float(c) for c in cells]
            except ValueError:
                raise ParseError(f"non-numeric cell in {cells!r}", line=lineno) from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ParseError(f"expected {width} values, found {len(values)}", line=lineno)
            if not all(np.isfinite(values)):
                raise ParseError("non-finite value", line=lineno)
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def save_csv(matrix, path) -> None:
    arr = np.asarray(matrix, dtype=np.float64)
    with open(path, "w") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def save_binary(matrix, path) -> None:
    arr = np.ascontiguousarray(matrix, dtype="<f8")
    if arr.ndim != 2:
        raise InvalidInputError("binary format stores 2-D matrices only")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes(order="C"))


def load_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    payload = memoryview(data)[_HEADER.size:]
    if rows * cols * 8 != len(payload):
        raise FormatError(
            f"{path}: header declares {rows}x{cols} values but payload has {len(payload)} bytes"
        )
    arr = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: payload contains non-finite values")
    return arr


def _is_csv(path) -> bool:
    return os.fspath(path).lower().endswith((".csv", ".txt"))


def load_matrix(path) -> np.ndarray:
    """Load by extension: ``.csv``/``.txt`` as CSV, anything else as binary."""
    return load_csv(path) if _is_csv(path) else load_binary(path)


def save_matrix(matrix, path) -> None:
    if _is_csv(path):
        save_csv(matrix, path)
    else:
        save_binary(matrix, path)


def apply_zero_policy(matrix: np.ndarray, policy: str, side: str = "x"):
    """Apply the zero-vector policy at load time.

    Returns ``(matrix, kept)`` where ``kept`` lists the original row indices
    that survive.
    """
    if policy not in ZERO_POLICIES:
        raise InvalidInputError(f"unknown zero-vector policy {policy!r}")
    zero = np.flatnonzero(np.linalg.norm(matrix, axis=1) == 0.0)
    kept = list(range(matrix.shape[0]))
    if zero.size == 0 or policy == "keep":
        return matrix, kept
    if policy == "reject":
        raise DegenerateNeuronError(
            f"{side} row {int(zero[0])} is a zero activation vector "
            "(pass --zero-policy drop or keep)",
            side=side,
            index=int(zero[0]),
        )
    mask = np.ones(matrix.shape[0], dtype=bool)
    mask[zero] = False
    return matrix[mask], [i for i in kept if mask[i]]
