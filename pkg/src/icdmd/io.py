"""File formats for fitting inputs and outputs.

Matrix CSV layout (used for the X / Y snapshot matrices): the first header
row holds sample indices, the first column holds the observable index, and
the payload is the m-by-n matrix itself::

    obs,0,1,2
    0,1.0,0.5,0.25
    1,0.0,1.0,2.0

JSON documents (constraint sets, fitted models) store every matrix as a list
of its *columns*, which keeps a constraint column or a snapshot pair readable
as one JSON row.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DimensionError


def save_matrix_csv(path, M: np.ndarray) -> Path:
    """Write a 2-D array with a sample-index header row and observable-index column."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"need a 2-D matrix, got shape {M.shape}")
    path = Path(path)
    m, n = M.shape
    header = "obs," + ",".join(str(j) for j in range(n)) if n else "obs"
    body = np.hstack([np.arange(m, dtype=float)[:, None], M])
    np.savetxt(path, body, delimiter=",", header=header, comments="")
    return path


def load_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by save_matrix_csv (header row and index column dropped)."""
    raw = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] < 2:
        raise DimensionError(f"{path}: expected an index column plus at least one sample")
    return raw[:, 1:]


def save_json(path, doc: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())
