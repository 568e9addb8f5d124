"""Two structural constraint patterns: affine offsets and delay coordinates.

First: fitting x+ = M x + b by lifting to (1, x) and pinning the constant
coordinate. The pinned row makes the lifted fit *be* an affine fit, the
recovered offset satisfies the textbook identity b = mean(y) - M mean(x),
and the dedicated centered solver lands on the same optimum.

Second: delay-embedding a scalar-observed (here: planted 2-D linear) system.
Stacking d+1 consecutive snapshots makes most rows of the one-step operator
pure bookkeeping -- each block must map to the next block verbatim -- and
encoding that as adjoint constraints forces the fitted operator's top rows
to the shifted identity exactly, so all fitting capacity goes into the one
block row that actually predicts.
"""

from __future__ import annotations

import numpy as np

from icdmd.constraints import ConstraintSet, ho_dmd_constraints
from icdmd.solver import frobenius_objective, solve_affine, solve_icdmd


def affine_story(rng):
    print("-- affine dynamics via one pinned coordinate " + "-" * 28)
    p, n = 2, 40
    M = np.array([[0.7, 0.2], [-0.1, 0.6]])
    b = np.array([0.3, -0.5])
    X2 = rng.standard_normal((p, n))
    Y2 = M @ X2 + b[:, None] + 0.05 * rng.standard_normal((p, n))

    e1 = np.zeros((p + 1, 1))
    e1[0, 0] = 1.0
    cs = ConstraintSet(m=p + 1, D=np.zeros((p + 1, 0)), Gplus=np.zeros((p + 1, 0)),
                       E=e1, Fplus=e1)
    Xl = np.vstack([np.ones(n), X2])
    Yl = np.vstack([np.ones(n), Y2])
    model = solve_icdmd(Xl, Yl, cs)

    print(f"lifted operator (first row pinned to e1^T):\n{np.round(model.A, 4)}")
    b_hat, M_hat = model.A[1:, 0], model.A[1:, 1:]
    print(f"recovered offset b = {np.round(b_hat, 4)} (planted {b})")
    identity_gap = np.linalg.norm(b_hat - (Y2.mean(axis=1) - M_hat @ X2.mean(axis=1)))
    print(f"offset identity |b - (mean(y) - M mean(x))| = {identity_gap:.2e}")

    affine = solve_affine(X2, Y2)
    print(f"centered solver ({affine.case}): same objective to rounding: "
          f"{frobenius_objective(affine.embed(), Xl, Yl):.8f} vs "
          f"{frobenius_objective(model.A, Xl, Yl):.8f}")
    print()


def delay_story(rng):
    print("-- delay coordinates with structure rows pinned " + "-" * 25)
    L = np.array([[0.9, 0.2], [-0.1, 0.8]])
    T = 30
    traj = np.empty((2, T))
    traj[:, 0] = rng.standard_normal(2)
    for t in range(T - 1):
        traj[:, t + 1] = L @ traj[:, t]
    stacked = np.vstack([traj[:, :-2], traj[:, 1:-1], traj[:, 2:]])
    X, Y = stacked[:, :-1], stacked[:, 1:]

    cs = ho_dmd_constraints(2, 2)  # blocks of 2, two delays -> m = 6
    model = solve_icdmd(X, Y, cs)
    print("delay-stacked state z_t = (x_t, x_t+1, x_t+2); the operator's top")
    print("four rows may only shift blocks left. Fitted operator:")
    with np.printoptions(precision=3, suppress=True):
        print(model.A)
    gap = np.abs(model.A[:4] - np.hstack([np.zeros((4, 2)), np.eye(4)])).max()
    print(f"worst deviation of the structure rows from the shifted identity: {gap:.2e}")
    print("only the bottom block row was actually estimated from data; it")
    print("carries the dynamics.")
    print()


def main():
    rng = np.random.default_rng(7)
    affine_story(rng)
    delay_story(rng)


if __name__ == "__main__":
    main()
