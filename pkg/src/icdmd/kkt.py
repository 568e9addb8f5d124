"""Independent brute-force oracle for the constrained fitting problem.

This module re-derives the minimizer of ||A X - Y||_F^2 subject to
A D = Gplus and E^T A = Fplus^T from first principles: vectorize A
column-major, write the objective and constraints through Kronecker products,
and solve the resulting KKT saddle system with a min-norm least-squares solve.

It deliberately shares nothing with the closed-form solver (only the error
types), so agreement of the two objective values is meaningful evidence.
Dense Kronecker blocks make it O((m^2)^3): test scale only.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, SolverError, UnsupportedError

MAX_KKT_DIM = 40


def kkt_oracle(X, Y, cs, rcond: float | None = None) -> np.ndarray:
    """One minimizer of the constrained problem, via the vectorized KKT system.

    With a = vec(A) (column-major), the stationarity and feasibility equations
    are

        [ H^T H   C^T ] [ a  ]   [ H^T vec(Y) ]
        [   C      0  ] [ nu ] = [     d      ]

    where H = kron(X^T, I) maps a to vec(A X), and C stacks
    kron(D^T, I) (geometric rows, right-hand side vec(Gplus)) over
    kron(I, E^T) (functional rows, right-hand side vec(Fplus^T)).
    Solved with numpy's min-norm lstsq; minimizers may differ from other
    solvers', so compare objective values, not matrices.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape or X.ndim != 2:
        raise DimensionError(f"X and Y must be equal-shape 2-D, got {X.shape} vs {Y.shape}")
    m = X.shape[0]
    if m != cs.m:
        raise DimensionError(f"data has m={m} rows but constraints have m={cs.m}")
    if m > MAX_KKT_DIM:
        raise UnsupportedError(
            f"kkt_oracle is a dense test-scale oracle; m={m} exceeds the cap {MAX_KKT_DIM}"
        )

    eye = np.eye(m)
    H = np.kron(X.T, eye)
    C = np.vstack(
        [
            np.kron(cs.D.T, eye) if cs.g else np.zeros((0, m * m)),
            np.kron(eye, cs.E.T) if cs.f else np.zeros((0, m * m)),
        ]
    )
    d = np.concatenate(
        [
            cs.Gplus.reshape(-1, order="F"),
            cs.Fplus.T.reshape(-1, order="F"),
        ]
    )

    k = C.shape[0]
    K = np.block([[H.T @ H, C.T], [C, np.zeros((k, k))]])
    rhs = np.concatenate([H.T @ Y.reshape(-1, order="F"), d])
    solution = np.linalg.lstsq(K, rhs, rcond=rcond)[0]

    defect = float(np.linalg.norm(K @ solution - rhs))
    if defect > 1e-6 * (1.0 + float(np.linalg.norm(rhs))):
        raise SolverError(
            f"KKT system inconsistent (defect {defect:.3e}); constraint set "
            "is likely incompatible"
        )
    return solution[: m * m].reshape(m, m, order="F")
