"""Model fitting: plain EDMD, invariant-consistent DMD, and the affine fit.

The central result implemented here is the closed-form minimizer of

    minimize ||A X - Y||_F   subject to   A D = Gplus,  E^T A = Fplus^T.

Writing Dperp/Eperp for orthonormal bases of the complements of range(D) and
range(E), every feasible A decomposes as A = C0 + Eperp M Dperp^T with a fixed
particular solution

    C0 = Gplus D^+ + (E^+)^T Fplus^T Dperp Dperp^T

and a free block M. Substituting and using orthonormality decouples the
objective, so the optimal free block is itself a small unconstrained
least-squares problem; we take its minimum-norm solution to make the output
deterministic when several minimizers exist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet, require_valid
from .errors import DimensionError
from .linalg import (
    DEFAULT_TOL,
    RankTolerance,
    matrix_rank,
    min_norm_right_lstsq,
    orthonormal_complement_basis,
    pseudo_inverse,
)

FEASIBILITY_RTOL = 1e-9


def _data_pair(X, Y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape != Y.shape:
        raise DimensionError(f"X and Y must be equal-shape 2-D, got {X.shape} vs {Y.shape}")
    return X, Y


def frobenius_objective(A: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
    """The fitted objective ||A X - Y||_F^2."""
    return float(np.linalg.norm(A @ X - Y) ** 2)


def solve_edmd(X, Y, tol: RankTolerance = DEFAULT_TOL) -> np.ndarray:
    """Unconstrained fit: the minimum-norm minimizer Y X^+ of ||A X - Y||_F."""
    X, Y = _data_pair(X, Y)
    return min_norm_right_lstsq(X, Y, tol)


def compute_c0(
    cs: ConstraintSet,
    tol: RankTolerance = DEFAULT_TOL,
    validate_first: bool = True,
    validation_tol: float = 1e-8,
) -> np.ndarray:
    """Particular solution C0 of the constraint equations.

    C0 = Gplus D^+ + (E^+)^T Fplus^T Dperp Dperp^T. Satisfies C0 D = Gplus and
    E^T C0 = Fplus^T whenever the set is compatible; empty sides contribute
    zero, so empty constraints give C0 = 0.
    """
    if validate_first:
        require_valid(cs, tol=validation_tol)
    Dperp = orthonormal_complement_basis(cs.D, tol)
    geometric = cs.Gplus @ pseudo_inverse(cs.D, tol)
    functional = pseudo_inverse(cs.E, tol).T @ cs.Fplus.T @ Dperp @ Dperp.T
    return geometric + functional


@dataclass(frozen=True)
class ICDMDModel:
    """A fitted invariant-consistent model and its constructive factors.

    A = C0 + Eperp @ Alsq @ Dperp.T exactly; residual is ||A X - Y||_F on the
    training data; the feasibility fields are the Frobenius norms of the two
    constraint defects (near machine precision for any validated set).
    """

    A: np.ndarray
    C0: np.ndarray
    Dperp: np.ndarray
    Eperp: np.ndarray
    Alsq: np.ndarray
    residual: float
    constraints: ConstraintSet
    feasibility_geometric: float
    feasibility_functional: float

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.C0 + self.Eperp @ self.Alsq @ self.Dperp.T

    def predict(self, Psi: np.ndarray) -> np.ndarray:
        return self.A @ Psi

    def to_doc(self, dictionary=None) -> dict:
        """JSON-ready document (matrices as lists of columns).

        Optionally embeds a dictionary descriptor so downstream eigenfunction
        evaluation can rebuild the observable basis without extra files.
        """
        doc = {
            "A": self.A.T.tolist(),
            "C0": self.C0.T.tolist(),
            "Alsq": self.Alsq.T.tolist(),
            "residual": self.residual,
            "objective": self.residual**2,
            "feasibility": {
                "geometric": self.feasibility_geometric,
                "functional": self.feasibility_functional,
            },
            "constraints": self.constraints.to_doc(),
        }
        if dictionary is not None:
            doc["dictionary"] = dictionary.descriptor()
        return doc

    @classmethod
    def from_doc(cls, doc: dict, tol: RankTolerance = DEFAULT_TOL) -> "ICDMDModel":
        try:
            cs = ConstraintSet.from_doc(doc["constraints"])
            A = np.asarray(doc["A"], dtype=float).T
            C0 = np.asarray(doc["C0"], dtype=float).T
            Alsq_cols = doc["Alsq"]
            residual = float(doc["residual"])
            feas = doc.get("feasibility", {})
        except (KeyError, TypeError, ValueError) as exc:
            raise DimensionError(f"malformed model document: {exc}") from exc
        Dperp = orthonormal_complement_basis(cs.D, tol)
        Eperp = orthonormal_complement_basis(cs.E, tol)
        Alsq = (
            np.asarray(Alsq_cols, dtype=float).T
            if Alsq_cols
            else np.zeros((Eperp.shape[1], Dperp.shape[1]))
        )
        if Alsq.shape != (Eperp.shape[1], Dperp.shape[1]):
            Alsq = Alsq.reshape(Eperp.shape[1], Dperp.shape[1])
        return cls(
            A=A,
            C0=C0,
            Dperp=Dperp,
            Eperp=Eperp,
            Alsq=Alsq,
            residual=residual,
            constraints=cs,
            feasibility_geometric=float(feas.get("geometric", np.nan)),
            feasibility_functional=float(feas.get("functional", np.nan)),
        )


def solve_icdmd(
    X,
    Y,
    cs: ConstraintSet,
    tol: RankTolerance = DEFAULT_TOL,
    validation_tol: float = 1e-8,
    strictness: str = "generalized",
) -> ICDMDModel:
    """Fit the best constraint-feasible linear model to data columns (X, Y).

    Validates the constraint set (raising ConstraintError with the report on
    failure), builds the complements and the particular solution C0, solves
    the decoupled free-block problem

        Alsq = Eperp^T (Y - C0 X) ((Dperp^T X))^+

    and assembles A = C0 + Eperp Alsq Dperp^T. Empty constraints degenerate to
    plain EDMD. The returned model records the training residual and both
    feasibility defects.
    """
    X, Y = _data_pair(X, Y)
    if X.shape[0] != cs.m:
        raise DimensionError(f"data has {X.shape[0]} observables but constraints have m={cs.m}")
    require_valid(cs, tol=validation_tol, strictness=strictness)

    Dperp = orthonormal_complement_basis(cs.D, tol)
    Eperp = orthonormal_complement_basis(cs.E, tol)
    C0 = compute_c0(cs, tol, validate_first=False)
    Alsq = min_norm_right_lstsq(Dperp.T @ X, Eperp.T @ (Y - C0 @ X), tol)
    A = C0 + Eperp @ Alsq @ Dperp.T

    return ICDMDModel(
        A=A,
        C0=C0,
        Dperp=Dperp,
        Eperp=Eperp,
        Alsq=Alsq,
        residual=float(np.linalg.norm(A @ X - Y)),
        constraints=cs,
        feasibility_geometric=float(np.linalg.norm(A @ cs.D - cs.Gplus)),
        feasibility_functional=float(np.linalg.norm(cs.E.T @ A - cs.Fplus.T)),
    )


@dataclass(frozen=True)
class AffineModel:
    """Affine fit y = Abar x + bbar of un-augmented state data.

    case is "exact_fit" when the affine interpolation problem is consistent
    (then Abar is the minimum-norm exact interpolant) and "least_squares"
    otherwise. Either way bbar = mu_y - Abar mu_x.
    """

    Abar: np.ndarray
    bbar: np.ndarray
    case: str
    mu_x: np.ndarray
    mu_y: np.ndarray

    def embed(self) -> np.ndarray:
        """Lift to the (p+1)-dimensional constant-augmented dictionary.

        Rows/columns ordered (constant, state): first row e1^T, first column
        stacks 1 over bbar, lower-right block is Abar. Applying this matrix to
        [1; x] reproduces [1; Abar x + bbar].
        """
        p = self.Abar.shape[0]
        A = np.zeros((p + 1, p + 1))
        A[0, 0] = 1.0
        A[1:, 0] = self.bbar
        A[1:, 1:] = self.Abar
        return A

    def predict(self, X2: np.ndarray) -> np.ndarray:
        return self.Abar @ X2 + self.bbar[:, None]


def solve_affine(X2, Y2, tol: RankTolerance = DEFAULT_TOL) -> AffineModel:
    """Fit y = Abar x + bbar to raw state columns by centered least squares.

    The exact-interpolation case and the least-squares case share one formula:
    Abar = Yc Xc^+ on mean-centered data (the minimum-norm choice), with
    bbar = mu_y - Abar mu_x. Which case applies is decided by a rank test on
    the 1-augmented data: row space of Y2 contained in that of [X2; 1^T].
    """
    X2, Y2 = _data_pair(X2, Y2)
    if X2.shape[1] < 1:
        raise DimensionError("need at least one sample column")
    mu_x = X2.mean(axis=1)
    mu_y = Y2.mean(axis=1)
    Xc = X2 - mu_x[:, None]
    Yc = Y2 - mu_y[:, None]
    Abar = min_norm_right_lstsq(Xc, Yc, tol)
    bbar = mu_y - Abar @ mu_x

    ones = np.ones((1, X2.shape[1]))
    X_aug = np.vstack([X2, ones])
    consistent = matrix_rank(np.vstack([X_aug, Y2]), tol) == matrix_rank(X_aug, tol)
    return AffineModel(
        Abar=Abar,
        bbar=bbar,
        case="exact_fit" if consistent else "least_squares",
        mu_x=mu_x,
        mu_y=mu_y,
    )
