"""Constrained and unconstrained model fitting.

The 2x2 hand instance has a fully worked closed form (first row and column
pinned, one free entry chasing the data); planted feasible instances check
exact constraint satisfaction plus optimality against random feasible
perturbations; the affine solver is checked on both the exact-interpolation
and least-squares cases together with its offset identity and its embedding
into the constant-augmented dictionary.
"""

from __future__ import annotations

import numpy as np
import pytest

from icdmd.constraints import (
    ConstraintSet,
    empty_constraints,
    from_eigenfunction,
    from_fixed_points,
    ho_dmd_constraints,
    merge,
)
from icdmd.dictionary import indicator_dictionary
from icdmd.errors import ConstraintError, DimensionError
from icdmd.linalg import orthonormal_complement_basis
from icdmd.solver import (
    ICDMDModel,
    compute_c0,
    frobenius_objective,
    solve_affine,
    solve_edmd,
    solve_icdmd,
)


def _e(i, m):
    v = np.zeros((m, 1))
    v[i, 0] = 1.0
    return v


def _random_compatible(rng, m, g, f, n):
    """Planted-feasibility instance: A0 exists, data is arbitrary."""
    A0 = rng.standard_normal((m, m))
    D = rng.standard_normal((m, g))
    E = rng.standard_normal((m, f))
    cs = ConstraintSet(m=m, D=D, Gplus=A0 @ D, E=E, Fplus=A0.T @ E)
    X = rng.standard_normal((m, n))
    Y = rng.standard_normal((m, n))
    return cs, X, Y, A0


# -- solve_edmd ----------------------------------------------------------------

def test_edmd_identity_data():
    rng = np.random.default_rng(0)
    Y = rng.standard_normal((3, 3))
    assert np.allclose(solve_edmd(np.eye(3), Y), Y, atol=1e-12)


def test_edmd_recovers_planted_map():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((4, 4))
    X = rng.standard_normal((4, 20))  # full row rank almost surely
    A = solve_edmd(X, M @ X)
    assert np.linalg.norm(A - M) <= 1e-10 * np.linalg.norm(M)


def test_edmd_compromises_on_contradictory_columns():
    # one input column mapped to two different outputs: no exact linear map
    X = np.array([[1.0, 1.0], [0.0, 0.0]])
    Y = np.array([[1.0, -1.0], [0.0, 0.0]])
    A = solve_edmd(X, Y)
    residual = np.linalg.norm(A @ X - Y)
    assert residual > 0.5
    assert np.allclose(A @ X, np.array([[0.0, 0.0], [0.0, 0.0]]), atol=1e-12)


# -- compute_c0 ----------------------------------------------------------------

def test_c0_empty_constraints_is_zero():
    assert np.array_equal(compute_c0(empty_constraints(3)), np.zeros((3, 3)))


def test_c0_single_geometric_column():
    cs = ConstraintSet(m=2, D=_e(0, 2), Gplus=_e(0, 2),
                       E=np.zeros((2, 0)), Fplus=np.zeros((2, 0)))
    assert np.allclose(compute_c0(cs), _e(0, 2) @ _e(0, 2).T, atol=1e-14)


def test_c0_single_functional_column():
    cs = ConstraintSet(m=2, D=np.zeros((2, 0)), Gplus=np.zeros((2, 0)),
                       E=_e(0, 2), Fplus=_e(0, 2))
    assert np.allclose(compute_c0(cs), _e(0, 2) @ _e(0, 2).T, atol=1e-14)


def test_c0_is_feasible_point():
    rng = np.random.default_rng(2)
    for _ in range(10):
        cs, _, _, _ = _random_compatible(rng, m=7, g=2, f=2, n=5)
        C0 = compute_c0(cs)
        assert np.linalg.norm(C0 @ cs.D - cs.Gplus) <= 1e-9 * (1 + np.linalg.norm(cs.Gplus))
        assert np.linalg.norm(cs.E.T @ C0 - cs.Fplus.T) <= 1e-9 * (1 + np.linalg.norm(cs.Fplus))


# -- solve_icdmd ---------------------------------------------------------------

def test_hand_instance_two_by_two():
    # X = I, Y = [[1,2],[3,4]]; row 1 pinned to e1^T, column 1 pinned to e1;
    # the only free entry is a22, best value 4. Objective |0-2|^2 + |0-3|^2.
    cs = ConstraintSet(m=2, D=_e(0, 2), Gplus=_e(0, 2), E=_e(0, 2), Fplus=_e(0, 2))
    Y = np.array([[1.0, 2.0], [3.0, 4.0]])
    model = solve_icdmd(np.eye(2), Y, cs)
    assert np.allclose(model.A, [[1.0, 0.0], [0.0, 4.0]], atol=1e-12)
    assert model.residual == pytest.approx(np.sqrt(13.0), rel=1e-12)
    assert model.feasibility_geometric <= 1e-14
    assert model.feasibility_functional <= 1e-14


def test_empty_constraints_degenerate_to_edmd():
    rng = np.random.default_rng(3)
    for _ in range(5):
        X = rng.standard_normal((5, 12))
        Y = rng.standard_normal((5, 12))
        A_edmd = solve_edmd(X, Y)
        model = solve_icdmd(X, Y, empty_constraints(5))
        assert np.linalg.norm(model.A - A_edmd) <= 1e-10 * np.linalg.norm(A_edmd)


def test_planted_feasible_instance_recovered():
    rng = np.random.default_rng(4)
    for _ in range(10):
        m, g, f, n = 8, 2, 2, 30
        cs, X, _, A0 = _random_compatible(rng, m, g, f, n)
        Y = A0 @ X  # consistent data: A0 itself is optimal with zero residual
        model = solve_icdmd(X, Y, cs)
        assert model.residual <= 1e-8 * np.linalg.norm(Y)


def test_constraints_hold_exactly_with_random_data():
    rng = np.random.default_rng(5)
    for _ in range(10):
        cs, X, Y, _ = _random_compatible(rng, m=9, g=3, f=2, n=25)
        model = solve_icdmd(X, Y, cs)
        assert np.linalg.norm(model.A @ cs.D - cs.Gplus) <= 1e-9 * (1 + np.linalg.norm(cs.Gplus))
        assert np.linalg.norm(cs.E.T @ model.A - cs.Fplus.T) <= 1e-9 * (1 + np.linalg.norm(cs.Fplus))


def test_optimality_against_feasible_perturbations():
    # any other feasible matrix A + Eperp Z Dperp^T must do no better
    rng = np.random.default_rng(6)
    cs, X, Y, _ = _random_compatible(rng, m=6, g=2, f=1, n=15)
    model = solve_icdmd(X, Y, cs)
    base = frobenius_objective(model.A, X, Y)
    for _ in range(100):
        Z = rng.standard_normal(model.Alsq.shape)
        A_alt = model.A + model.Eperp @ Z @ model.Dperp.T
        # perturbation stays feasible
        assert np.linalg.norm(A_alt @ cs.D - cs.Gplus) <= 1e-8 * (1 + np.linalg.norm(cs.Gplus))
        assert frobenius_objective(A_alt, X, Y) >= base - 1e-10


def test_parametrization_round_trip():
    # Atil = Eperp^T A Dperp recovers the free block of any feasible A
    rng = np.random.default_rng(7)
    cs, X, Y, _ = _random_compatible(rng, m=7, g=2, f=2, n=20)
    model = solve_icdmd(X, Y, cs)
    Atil = model.Eperp.T @ model.A @ model.Dperp
    assert np.linalg.norm(Atil - model.Alsq) <= 1e-10 * max(1.0, np.linalg.norm(model.Alsq))
    assert np.linalg.norm(model.reconstruct() - model.A) <= 1e-12 * max(1.0, np.linalg.norm(model.A))


def test_incompatible_constraints_raise_with_report():
    cs = ConstraintSet(m=2, D=_e(0, 2), Gplus=_e(0, 2), E=_e(0, 2), Fplus=2 * _e(0, 2))
    with pytest.raises(ConstraintError) as err:
        solve_icdmd(np.eye(2), np.eye(2), cs)
    assert err.value.report is not None
    assert not err.value.report.passed


def test_data_constraint_dimension_mismatch():
    with pytest.raises(DimensionError):
        solve_icdmd(np.eye(3), np.eye(3), empty_constraints(4))


def test_fixed_point_is_exactly_preserved_downstream():
    # after fitting, the model maps the fixed-point dictionary image to itself
    d = indicator_dictionary(1, 16, (-1.0, 1.0))
    cs, _ = from_fixed_points(d, [0.2])
    rng = np.random.default_rng(8)
    X = d.evaluate(rng.uniform(-1, 1, (1, 200)))
    Y = d.evaluate(rng.uniform(-1, 1, (1, 200)))
    model = solve_icdmd(X, Y, cs)
    psi_star = d.evaluate([[0.2]])
    assert np.linalg.norm(model.A @ psi_star - psi_star) <= 1e-12


# -- delay-embedding structure ---------------------------------------------------

def test_ho_dmd_rows_are_shifted_identity():
    rng = np.random.default_rng(9)
    L = np.array([[0.9, 0.2], [-0.1, 0.8]])  # planted 2-D linear map
    x = rng.standard_normal((2, 60))
    traj = [x]
    for _ in range(3):
        traj.append(L @ traj[-1])
    Z = [np.vstack([traj[i], traj[i + 1], traj[i + 2]]) for i in range(2)]
    X, Y = Z[0], Z[1]
    cs = ho_dmd_constraints(2, 2)
    model = solve_icdmd(X, Y, cs)
    target = np.hstack([np.zeros((4, 2)), np.eye(4)])
    assert np.linalg.norm(model.A[:4] - target) <= 1e-10


# -- affine fitting ----------------------------------------------------------------

def test_affine_identity_dynamics():
    rng = np.random.default_rng(10)
    X2 = rng.standard_normal((2, 9))
    model = solve_affine(X2, X2)
    assert np.linalg.norm(model.predict(X2) - X2) <= 1e-10
    assert np.linalg.norm(model.bbar - (model.mu_y - model.Abar @ model.mu_x)) <= 1e-12


def test_affine_recovers_planted_map():
    rng = np.random.default_rng(11)
    M = rng.standard_normal((3, 3))
    c = rng.standard_normal(3)
    X2 = rng.standard_normal((3, 25))
    Y2 = M @ X2 + c[:, None]
    model = solve_affine(X2, Y2)
    assert model.case == "exact_fit"
    assert np.linalg.norm(model.Abar - M) <= 1e-9 * np.linalg.norm(M)
    assert np.linalg.norm(model.bbar - c) <= 1e-9 * max(1.0, np.linalg.norm(c))


def test_affine_inconsistent_offset_identity():
    rng = np.random.default_rng(12)
    X2 = rng.standard_normal((2, 40))
    Y2 = rng.standard_normal((2, 40))
    model = solve_affine(X2, Y2)
    assert model.case == "least_squares"
    assert np.linalg.norm(model.bbar - (Y2.mean(axis=1) - model.Abar @ X2.mean(axis=1))) <= 1e-10


def test_affine_embed_matches_constrained_solve():
    # lifting the data with a constant row and constraining e1 reproduces the
    # affine objective
    rng = np.random.default_rng(13)
    X2 = rng.standard_normal((2, 30))
    Y2 = rng.standard_normal((2, 30))
    ones = np.ones((1, 30))
    PsiX, PsiY = np.vstack([ones, X2]), np.vstack([ones, Y2])
    cs = from_eigenfunction([1.0, 0.0, 0.0], 1.0)
    model_ic = solve_icdmd(PsiX, PsiY, cs)
    A_emb = solve_affine(X2, Y2).embed()
    assert np.allclose(A_emb[0], [1.0, 0.0, 0.0], atol=1e-14)
    obj_ic = frobenius_objective(model_ic.A, PsiX, PsiY)
    obj_emb = frobenius_objective(A_emb, PsiX, PsiY)
    assert abs(obj_ic - obj_emb) <= 1e-8 * max(1.0, obj_ic)
    # first row of the constrained solve is pinned to e1^T
    assert np.linalg.norm(model_ic.A[0] - np.array([1.0, 0.0, 0.0])) <= 1e-10


def test_affine_offset_identity_on_lifted_constrained_model():
    # the constrained model's offset column obeys b = mu_Y - A_state mu_X
    rng = np.random.default_rng(14)
    for consistent in (True, False):
        X2 = rng.standard_normal((2, 35))
        if consistent:
            M = rng.standard_normal((2, 2))
            c = rng.standard_normal(2)
            Y2 = M @ X2 + c[:, None]
        else:
            Y2 = rng.standard_normal((2, 35))
        ones = np.ones((1, X2.shape[1]))
        model = solve_icdmd(np.vstack([ones, X2]), np.vstack([ones, Y2]),
                            from_eigenfunction([1.0, 0.0, 0.0], 1.0))
        b = model.A[1:, 0]
        A_state = model.A[1:, 1:]
        assert np.linalg.norm(b - (Y2.mean(axis=1) - A_state @ X2.mean(axis=1))) <= 1e-8


def test_affine_needs_samples():
    with pytest.raises(DimensionError):
        solve_affine(np.zeros((2, 0)), np.zeros((2, 0)))


# -- model serialization ------------------------------------------------------------

def test_model_doc_round_trip():
    d = indicator_dictionary(1, 8, (-1.0, 1.0))
    geo, _ = from_fixed_points(d, [0.2])
    cs = merge(geo, from_eigenfunction(d.constant_representer, 1.0))
    rng = np.random.default_rng(15)
    X = d.evaluate(rng.uniform(-1, 1, (1, 100)))
    Y = d.evaluate(rng.uniform(-1, 1, (1, 100)))
    model = solve_icdmd(X, Y, cs)
    doc = model.to_doc(d)
    assert doc["objective"] == pytest.approx(model.residual**2)
    assert doc["dictionary"]["kind"] == "indicator"
    back = ICDMDModel.from_doc(doc)
    assert np.array_equal(back.A, model.A)
    assert np.array_equal(back.C0, model.C0)
    assert back.constraints.g == cs.g and back.constraints.f == cs.f
    assert back.constraints.tags[0].label == "fixed_point_0"
    # reconstructed complements still factor A
    assert np.linalg.norm(back.reconstruct() - back.A) <= 1e-10


def test_model_doc_malformed():
    with pytest.raises(DimensionError):
        ICDMDModel.from_doc({"A": [[1.0]]})
