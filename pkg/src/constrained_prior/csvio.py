"""Plain CSV matrices: comma-separated rows, no header, 17 significant digits."""

from __future__ import annotations

import io

import numpy as np

FMT = "%.17g"


def format_matrix(x) -> str:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    buf = io.StringIO()
    np.savetxt(buf, x, fmt=FMT, delimiter=",")
    return buf.getvalue()


def write_matrix(path, x):
    # newline="" keeps the bytes identical across platforms
    with open(path, "w", newline="") as fh:
        fh.write(format_matrix(x))


def read_matrix(path) -> np.ndarray:
    x = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if x.size == 0:
        raise ValueError(f"{path}: no data")
    return x


def read_vector(spec) -> np.ndarray:
    """A vector from a CSV file (one row or one column) or an inline ``"1,2,3"`` string."""
    text = str(spec)
    if "," in text or _is_number(text):
        try:
            return np.array([float(t) for t in text.split(",")])
        except ValueError:
            pass
    x = read_matrix(text)
    if min(x.shape) != 1:
        raise ValueError(f"{text}: expected a single row or column, got shape {x.shape}")
    return x.reshape(-1)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True
