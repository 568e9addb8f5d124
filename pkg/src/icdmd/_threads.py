"""Thread-cap plumbing; must stay free of numpy imports.

The BLAS behind numpy decides its thread count when numpy is first imported,
so the ICDMD_THREADS cap has to land in the environment before that happens.
The package __init__ calls this first; invalid values are ignored rather than
making the package unimportable.
"""

from __future__ import annotations

import os

_BLAS_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def apply_thread_cap() -> None:
    cap = os.environ.get("ICDMD_THREADS", "").strip()
    if not cap.isdigit() or int(cap) < 1:
        return
    for var in _BLAS_VARS:
        os.environ.setdefault(var, cap)
