"""Run reports: one JSON document per CLI invocation.

Keys are sorted and floats are written with ``repr`` precision, so identical
inputs give byte-identical output once the ``timing`` field is removed.
"""
from __future__ import annotations

import csv
import hashlib
import json

import numpy as np


def matrix_digest(matrix: np.ndarray) -> dict:
    arr = np.ascontiguousarray(matrix, dtype="<f8")
    return {
        "rows": int(arr.shape[0]),
        "cols": int(arr.shape[1]),
        "sha256": hashlib.sha256(arr.tobytes()).hexdigest(),
    }


def render(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse(text: str) -> dict:
    return json.loads(text)


def without_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


def histogram_dict(hist: dict) -> dict:
    return {str(size): count for size, count in sorted(hist.items())}


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
