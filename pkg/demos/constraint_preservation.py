"""What the constrained fit actually guarantees, on instances small enough to read.

Walks through: a 2-by-2 instance solvable by hand, exact constraint
satisfaction on a random compatible instance, agreement with a brute-force
KKT solve of the same problem, and the reduction to plain least squares when
no constraints are supplied.
"""

from __future__ import annotations

import numpy as np

from icdmd.constraints import ConstraintSet, empty_constraints
from icdmd.kkt import kkt_oracle
from icdmd.solver import frobenius_objective, solve_edmd, solve_icdmd


def hand_instance():
    print("-- a 2x2 instance you can check on paper " + "-" * 30)
    e1 = np.array([[1.0], [0.0]])
    cs = ConstraintSet(m=2, D=e1, Gplus=e1, E=e1, Fplus=e1)
    X = np.eye(2)
    Y = np.array([[1.0, 2.0], [3.0, 4.0]])
    model = solve_icdmd(X, Y, cs)
    print("constraints pin column 1 to e1 (A e1 = e1) and row 1 to e1^T (e1^T A = e1^T),")
    print("so only the bottom-right entry is free; the best fit to Y sets it to 4:")
    print(np.round(model.A, 12))
    print(f"residual = {model.residual:.6f} (sqrt(13): the |2| and |3| in Y are unreachable)")
    print()


def random_compatible(rng, m=10, g=2, f=2, n=30):
    print("-- exact preservation on a random compatible instance " + "-" * 17)
    A0 = rng.standard_normal((m, m))
    D = rng.standard_normal((m, g))
    E = rng.standard_normal((m, f))
    cs = ConstraintSet(m=m, D=D, Gplus=A0 @ D, E=E, Fplus=A0.T @ E)
    X = rng.standard_normal((m, n))
    Y = rng.standard_normal((m, n))
    model = solve_icdmd(X, Y, cs)
    print(f"m={m} observables, {g} image constraints, {f} adjoint constraints, n={n} samples")
    print(f"geometric feasibility |A D - Gplus|  = {np.linalg.norm(model.A @ D - cs.Gplus):.2e}")
    print(f"functional feasibility |E^T A - F^T| = {np.linalg.norm(E.T @ model.A - cs.Fplus.T):.2e}")
    print("both hold to machine precision regardless of the (random) data")
    print()


def kkt_cross_check(rng):
    print("-- cross-check against a brute-force KKT solve " + "-" * 25)
    A0 = rng.standard_normal((4, 4))
    D = rng.standard_normal((4, 1))
    E = rng.standard_normal((4, 1))
    cs = ConstraintSet(m=4, D=D, Gplus=A0 @ D, E=E, Fplus=A0.T @ E)
    X, Y = rng.standard_normal((4, 9)), rng.standard_normal((4, 9))
    fast = solve_icdmd(X, Y, cs).A
    slow = kkt_oracle(X, Y, cs)
    print("the closed-form solve and an independent stacked-KKT solve of the same")
    print("quadratic program must find the same optimum:")
    print(f"objective (closed form) = {frobenius_objective(fast, X, Y):.10f}")
    print(f"objective (KKT system)  = {frobenius_objective(slow, X, Y):.10f}")
    print()


def empty_reduction(rng):
    print("-- no constraints: the fit is plain least squares " + "-" * 22)
    X = rng.standard_normal((5, 14))
    Y = rng.standard_normal((5, 14))
    model = solve_icdmd(X, Y, empty_constraints(5))
    gap = np.linalg.norm(model.A - solve_edmd(X, Y))
    print(f"|A_constrained - A_least_squares| = {gap:.2e}")
    print()


def main():
    rng = np.random.default_rng(0)
    hand_instance()
    random_compatible(rng)
    kkt_cross_check(rng)
    empty_reduction(rng)


if __name__ == "__main__":
    main()
