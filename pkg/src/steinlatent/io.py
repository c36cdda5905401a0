"""Atomic file output and matrix CSV round-tripping."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def format_matrix(A) -> str:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return "".join(",".join("%.17g" % v for v in row) + "\n" for row in A)


def write_matrix_csv(path, A) -> Path:
    """Headerless CSV, one matrix row per line, 17 significant digits."""
    return atomic_write_text(path, format_matrix(A))


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)
