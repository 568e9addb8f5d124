"""Shared fixtures: the four desk-scale benchmark runs, computed once.

The desk experiments back several test modules (pipeline behavior, the
acceptance suite's spectral/invariance criteria), so they are session-scoped;
wall-clock times are kept alongside for the runtime budget check.
"""

from __future__ import annotations

import time

import pytest

from icdmd import preset_config, run_experiment

DESK_SYSTEMS = (
    "cubic_multistable",
    "cubic_halfstable",
    "duffing",
    "polar_limit_cycles",
)


@pytest.fixture(scope="session")
def desk_results():
    """{system name: (ExperimentResult, wall seconds)} for all desk presets."""
    out = {}
    for name in DESK_SYSTEMS:
        t0 = time.perf_counter()
        result = run_experiment(preset_config(name, "desk"))
        out[name] = (result, time.perf_counter() - t0)
    return out
