"""Benchmark systems, integration, orbits, and data-matrix assembly.

The integrator is held to closed-form solutions (equilibria, the rotation on
the polar cycle, the scalar exponential) and to the fourth-order step-halving
ratio; grid sampling and snapshot assembly are checked against hand-countable
cases plus the stated magnitudes of the large-scale protocol.
"""

from __future__ import annotations

import numpy as np
import pytest

from icdmd.dictionary import indicator_dictionary
from icdmd.dynamics import (
    GRID_POINT_CAP,
    OdeSystem,
    SamplingPlan,
    build_data_matrices,
    builtin,
    builtin_names,
    flow,
    periodic_orbit,
    sample_grid,
)
from icdmd.errors import DimensionError, DomainError, UnsupportedError


# -- built-in systems ----------------------------------------------------------

def test_builtin_names():
    assert set(builtin_names()) == {
        "cubic_multistable", "cubic_halfstable", "duffing", "polar_limit_cycles",
    }
    with pytest.raises(DimensionError):
        builtin("van_der_pol")


def test_cubic_multistable_roots():
    sys = builtin("cubic_multistable")
    for x in (-0.5, 0.2, 0.7):
        assert abs(sys.vector_field(np.array([x]))[0]) <= 1e-15


def test_cubic_halfstable_signs():
    # double root at 0.2: field keeps its sign on both sides
    sys = builtin("cubic_halfstable")
    assert sys.vector_field(np.array([0.15]))[0] < 0
    assert sys.vector_field(np.array([0.25]))[0] < 0


def test_duffing_fixed_points():
    sys = builtin("duffing")
    for x in (-1 / 6, 0.0, 1 / 6):
        v = sys.vector_field(np.array([x, 0.0]))
        assert np.linalg.norm(v) <= 1e-15


def test_polar_radial_roots():
    sys = builtin("polar_limit_cycles")
    for r in (1 / 3, 2 / 3):
        v = sys.vector_field(np.array([r, 0.0]))
        # radial component vanishes on the cycle; rotation remains
        assert abs(v[0]) <= 1e-14
        assert v[1] == pytest.approx(2 * np.pi * r)


# -- flow ------------------------------------------------------------------------

def test_fixed_points_are_equilibria():
    for name in builtin_names():
        sys = builtin(name)
        fps = sys.known_fixed_points
        out = flow(sys, fps, k=0.7)
        assert np.abs(out - fps).max() <= 1e-12


def test_polar_rotation_on_cycle():
    sys = builtin("polar_limit_cycles")
    out = flow(sys, np.array([[1 / 3], [0.0]]), k=1 / 6)
    expected = np.array([[1 / 6], [np.sqrt(3) / 6]])  # rotation by pi/3
    assert np.linalg.norm(out - expected) <= 1e-8


def test_linear_system_exponential():
    lin = OdeSystem(name="lin", dim=1, vector_field=lambda u: -u,
                    known_fixed_points=np.zeros((1, 1)))
    x0 = np.array([[0.3, -1.2, 2.0]])
    out = flow(lin, x0, k=1.0, substeps=50)
    assert np.abs(out - np.e**-1 * x0).max() <= 1e-8


def test_rk4_step_halving_ratio():
    # fourth-order one-step error shrinks ~16x when the step is halved
    sys = builtin("duffing")
    x0 = np.array([[0.31], [-0.12]])
    ref = flow(sys, x0, k=0.8, substeps=512)
    err1 = np.linalg.norm(flow(sys, x0, k=0.8, substeps=4) - ref)
    err2 = np.linalg.norm(flow(sys, x0, k=0.8, substeps=8) - ref)
    assert 12.0 <= err1 / err2 <= 20.0


def test_flow_rejects_bad_args():
    sys = builtin("cubic_multistable")
    with pytest.raises(DimensionError):
        flow(sys, np.zeros((2, 3)), k=0.1)  # wrong dimension
    with pytest.raises(DimensionError):
        flow(sys, np.zeros((1, 3)), k=-0.1)


# -- periodic orbits ---------------------------------------------------------------

def test_polar_orbit_six_points():
    orbit = periodic_orbit(builtin("polar_limit_cycles"), cycle_index=0, k=1 / 6)
    assert orbit.shape == (2, 6)
    assert np.allclose(orbit[:, 0], [1 / 3, 0.0], atol=1e-14)
    assert np.allclose(np.linalg.norm(orbit, axis=0), 1 / 3, atol=1e-14)


def test_orbit_integrator_cross_check():
    sys = builtin("polar_limit_cycles")
    orbit = periodic_orbit(sys, cycle_index=1, k=1 / 6)
    images = flow(sys, orbit, k=1 / 6)
    assert np.linalg.norm(images - np.roll(orbit, -1, axis=1)) <= 1e-7


def test_orbit_phase_rotates_copy():
    sys = builtin("polar_limit_cycles")
    base = periodic_orbit(sys, cycle_index=0, k=1 / 6, phase=0.0)
    rot = periodic_orbit(sys, cycle_index=0, k=1 / 6, phase=np.pi / 12)
    c, s = np.cos(np.pi / 12), np.sin(np.pi / 12)
    R = np.array([[c, -s], [s, c]])
    assert np.linalg.norm(rot - R @ base) <= 1e-12


def test_orbit_requires_k_dividing_period():
    with pytest.raises(DimensionError):
        periodic_orbit(builtin("polar_limit_cycles"), cycle_index=0, k=0.21)


def test_orbit_unsupported_for_cycle_free_systems():
    with pytest.raises(UnsupportedError):
        periodic_orbit(builtin("duffing"))


# -- sampling ---------------------------------------------------------------------

def test_sample_grid_1d_centers():
    plan = SamplingPlan(bounds=np.array([[-1.0, 1.0]]), counts=(4,), k=0.1)
    grid = sample_grid(plan)
    assert np.allclose(grid.ravel(), [-0.75, -0.25, 0.25, 0.75], atol=1e-15)


def test_sample_grid_2d_count():
    plan = SamplingPlan(bounds=np.array([[-1.0, 1.0], [-1.0, 1.0]]), counts=(2, 2), k=0.1)
    grid = sample_grid(plan)
    assert grid.shape == (2, 4)
    assert np.abs(grid).max() == 0.5


def test_sample_grid_strictly_interior():
    plan = SamplingPlan(bounds=np.array([[0.0, 1.0]]), counts=(12000,), k=0.1)
    grid = sample_grid(plan)
    assert grid.shape == (1, 12000)
    assert grid.min() > 0.0 and grid.max() < 1.0


def test_sampling_plan_guards():
    with pytest.raises(DimensionError):
        SamplingPlan(bounds=np.array([[-1.0, 1.0]]), counts=(1,), k=0.1)
    with pytest.raises(DimensionError):
        SamplingPlan(bounds=np.array([[-1.0, 1.0]]), counts=(4, 4), k=0.1)
    with pytest.raises(DimensionError):
        SamplingPlan(bounds=np.array([[-1.0, 1.0]]), counts=(4,), k=0.0)
    big = int(np.ceil(np.sqrt(GRID_POINT_CAP))) + 1
    with pytest.raises(DimensionError):
        sample_grid(SamplingPlan(bounds=np.array([[-1.0, 1.0], [-1.0, 1.0]]),
                                 counts=(big, big), k=0.1))


# -- data matrices -----------------------------------------------------------------

def test_identity_dictionary_linear_system():
    # with psi = x the snapshot pair is exactly (X, e^{-k} X)
    class IdentityDict:
        dim, m = 1, 1

        def evaluate(self, pts, policy="error"):
            return np.asarray(pts, dtype=float)

        def contains(self, pts):
            return np.ones(np.asarray(pts).shape[1], dtype=bool)

    lin = OdeSystem(name="lin", dim=1, vector_field=lambda u: -u,
                    known_fixed_points=np.zeros((1, 1)))
    plan = SamplingPlan(bounds=np.array([[-1.0, 1.0]]), counts=(64,), k=0.5)
    data = build_data_matrices(IdentityDict(), lin, plan)
    assert np.abs(data.Y - np.exp(-0.5) * data.X).max() <= 1e-8


def test_fixed_point_column_is_stationary():
    d = indicator_dictionary(1, 31, (-1.0, 1.0))
    sys = builtin("cubic_multistable")
    plan = SamplingPlan(bounds=np.array([[-1.0, 1.0]]), counts=(1201,), k=0.1)
    data = build_data_matrices(d, sys, plan)
    # the sample nearest each fixed point stays in its own cell
    for star in (-0.5, 0.2, 0.7):
        j = int(np.argmin(np.abs(data.points[0] - star)))
        assert np.array_equal(data.X[:, j], data.Y[:, j])


def test_escape_policies():
    # half-stable cubic pushes mass past the right edge for x > 0.7
    d = indicator_dictionary(1, 31, (-1.0, 1.0))
    sys = builtin("cubic_halfstable")
    plan = SamplingPlan(bounds=np.array([[-1.0, 1.0]]), counts=(1201,), k=0.1)
    dropped = build_data_matrices(d, sys, plan, policy="drop")
    assert dropped.dropped > 0
    assert dropped.X.shape[1] == 1201 - dropped.dropped
    clamped = build_data_matrices(d, sys, plan, policy="clamp")
    assert clamped.X.shape[1] == 1201
    with pytest.raises(DomainError):
        build_data_matrices(d, sys, plan, policy="error")
    with pytest.raises(DimensionError):
        build_data_matrices(d, sys, plan, policy="ignore")


def test_paper_scale_shapes():
    d = indicator_dictionary(1, 61, (-1.0, 1.0))
    sys = builtin("cubic_multistable")
    plan = SamplingPlan(bounds=np.array([[-1.0, 1.0]]), counts=(12001,), k=0.1)
    data = build_data_matrices(d, sys, plan)
    assert data.X.shape[0] == 61
    # magnitudes of the upstream protocol: ~60 observables, ~12,000 samples
    assert 11000 <= data.X.shape[1] <= 12001
