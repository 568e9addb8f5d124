"""Equalizers and duality-induced eigenfunctions at a known eigenvalue.

Geometric constraint columns generate right eigenvectors of any feasible A:
for fixed points A psi(u*) = psi(u*) directly, and for a limit cycle the
orbit-averaged column is preserved because A permutes the orbit's columns
cyclically. The *equalizer* Vhat packages this: Gplus Vhat = lambda D Vhat,
so D0 = D Vhat collects s independent right eigenvectors at lambda.

*Induced eigenfunctions* are the dual objects: a full-column-rank W with

    W^T A = lambda W^T      and      W^T D0 = I_s.

Row i of W^T then defines a function w_i^T psi whose value at encoded
invariant j (averaged over the orbit for cycles) is exactly delta_ij, and
whose level set near 1 estimates the invariant set around invariant i.

The solve is sequential by default: one null-space computation of
(A^T - lambda I), then a small least-squares normalization — no full
eigendecomposition. The stacked simultaneous variant is kept behind a flag
for comparison; the baseline for unconstrained models approximates the same
object from the nearest eigenvalues of A^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet, InvariantTag
from .errors import ConstraintError, DimensionError, SpectralError
from .linalg import (
    DEFAULT_TOL,
    RankTolerance,
    matrix_rank,
    orthonormal_complement_basis,
    pseudo_inverse,
)

EQUALIZER_RTOL = 1e-12
INDUCED_TOL = 1e-8


@dataclass(frozen=True)
class Equalizer:
    """Vhat with Gplus Vhat = lambda D Vhat, and the eigenvectors D0 = D Vhat."""

    Vhat: np.ndarray  # (g, s)
    lam: float
    D0: np.ndarray  # (m, s)
    residual: float
    labels: tuple[str, ...] = ()

    @property
    def s(self) -> int:
        return self.Vhat.shape[1]


def build_equalizer(
    tags, cs: ConstraintSet, lam: float = 1.0, rtol: float = EQUALIZER_RTOL
) -> Equalizer:
    """Assemble the block equalizer for the tagged geometric invariants.

    Each fixed-point tag contributes a standard basis column; each
    limit-cycle tag of period q contributes 1/q on its q indices (the orbit
    average), zeros elsewhere — so column i of D0 is the (averaged)
    dictionary image of invariant i and W^T D0 = I makes orbit averages, not
    sums, equal to 1. The identity Gplus Vhat = lambda D Vhat is exact by the
    cyclic-shift construction; a residual above rtol means the orbit ordering
    (or the constraint set) is wrong.
    """
    tags = tuple(tags)
    if not tags:
        raise DimensionError("need at least one invariant tag to build an equalizer")
    for t in tags:
        if not isinstance(t, InvariantTag) or t.stop > cs.g:
            raise DimensionError("tags must reference geometric columns of the constraint set")
    Vhat = np.zeros((cs.g, len(tags)))
    for i, tag in enumerate(tags):
        Vhat[tag.start : tag.stop, i] = 1.0 / tag.period
    D0 = cs.D @ Vhat
    residual = float(np.linalg.norm(cs.Gplus @ Vhat - lam * D0))
    if residual > rtol * max(1.0, float(np.linalg.norm(D0))):
        raise ConstraintError(
            f"equalizer residual {residual:.3e} too large: encoded orbits are not "
            f"cyclically consistent at eigenvalue {lam}"
        )
    return Equalizer(
        Vhat=Vhat,
        lam=float(lam),
        D0=D0,
        residual=residual,
        labels=tuple(t.label for t in tags),
    )


@dataclass(frozen=True)
class EigenfunctionSet:
    """Coefficient vectors W of s functions w_i = W[:, i]^T psi at one eigenvalue.

    enforced marks sets whose residual bounds were checked at construction
    (the induced solve); baseline fits record their residuals without any
    guarantee.
    """

    W: np.ndarray  # (m, s)
    lam: float
    eig_residual: float
    duality_residual: float
    method: str
    enforced: bool
    labels: tuple[str, ...] = ()

    @property
    def s(self) -> int:
        return self.W.shape[1]

    def passes(self, A: np.ndarray, tol: float = INDUCED_TOL) -> bool:
        scale = float(np.linalg.norm(A))
        return self.eig_residual <= tol * max(scale, 1.0) and self.duality_residual <= tol

    def to_doc(self) -> dict:
        return {
            "W": self.W.T.tolist(),
            "lambda": self.lam,
            "eig_residual": self.eig_residual,
            "duality_residual": self.duality_residual,
            "method": self.method,
            "labels": list(self.labels),
        }


def _residuals(W: np.ndarray, A: np.ndarray, D0: np.ndarray, lam: float) -> tuple[float, float]:
    eig = float(np.linalg.norm(W.T @ A - lam * W.T))
    dual = float(np.linalg.norm(W.T @ D0 - np.eye(D0.shape[1])))
    return eig, dual


def induced_eigenfunctions(
    model,
    eq: Equalizer,
    tol: RankTolerance = DEFAULT_TOL,
    method: str = "sequential",
    residual_tol: float = INDUCED_TOL,
) -> EigenfunctionSet:
    """Extract the dual eigenfunctions of a fitted invariant-consistent model.

    model is an ICDMDModel or a bare (m, m) matrix whose left eigenspace at
    eq.lam has dimension >= s (guaranteed for models fitted with the
    equalizer's constraints: D0 collects s right eigenvectors, so the left
    eigenspace matches).

    Sequential method (default): N spans the null space of (A^T - lambda I);
    the normalization W = N M with M^T = (N^T D0)^+ is the minimum-norm
    solution of W^T D0 = I inside the eigenspace. Simultaneous method: one
    stacked least-squares on both defining equations (kept for comparison;
    known to be the numerically weaker construction). Residual bounds are
    enforced for the sequential solve.
    """
    A = np.asarray(getattr(model, "A", model), dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"model matrix must be square, got {A.shape}")
    m = A.shape[0]
    if eq.D0.shape[0] != m:
        raise DimensionError("equalizer and model disagree on the observable count")
    s = eq.s
    lam = eq.lam

    if method == "sequential":
        N = orthonormal_complement_basis(A - lam * np.eye(m), tol)
        if N.shape[1] < s:
            raise SpectralError(
                f"left eigenspace at {lam} has dimension {N.shape[1]} < s={s}; "
                "the model does not carry the encoded invariants"
            )
        P = N.T @ eq.D0
        if matrix_rank(P, tol) < s:
            raise SpectralError(
                "duality system is rank-deficient: encoded invariants are not "
                "independent inside the eigenspace"
            )
        W = N @ pseudo_inverse(P, tol).T
    elif method == "simultaneous":
        stacked = np.hstack([A - lam * np.eye(m), eq.D0])
        target = np.hstack([np.zeros((s, m)), np.eye(s)])
        W = (target @ pseudo_inverse(stacked, tol)).T
    else:
        raise DimensionError(f"unknown method {method!r}")

    eig_res, dual_res = _residuals(W, A, eq.D0, lam)
    enforced = method == "sequential"
    if enforced:
        scale = max(float(np.linalg.norm(A)), 1.0)
        if eig_res > residual_tol * scale or dual_res > residual_tol:
            raise SpectralError(
                f"induced eigenfunctions failed their contract: eigen residual "
                f"{eig_res:.3e} (scale {scale:.3e}), duality residual {dual_res:.3e}"
            )
    return EigenfunctionSet(
        W=W,
        lam=lam,
        eig_residual=eig_res,
        duality_residual=dual_res,
        method=f"induced_{method}",
        enforced=enforced,
        labels=eq.labels,
    )


def edmd_nearest_span_fit(
    A_edmd,
    D0: np.ndarray,
    lam: float = 1.0,
    span_size: int | None = None,
    tol: RankTolerance = DEFAULT_TOL,
    labels: tuple[str, ...] = (),
) -> EigenfunctionSet:
    """Baseline eigenfunctions for models without encoded invariants.

    Takes the left eigenvectors of A whose eigenvalues lie nearest lambda
    (complex-conjugate pairs are kept together so the span stays real),
    orthonormalizes their real/imaginary parts, and solves the same duality
    normalization by least squares inside that span. Residuals are recorded
    but deliberately not enforced — this is the imperfect reference that
    constrained models are compared against.
    """
    A = np.asarray(getattr(A_edmd, "A", A_edmd), dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"model matrix must be square, got {A.shape}")
    s = D0.shape[1]
    if span_size is None:
        span_size = s
    if span_size < s:
        raise DimensionError(f"span_size {span_size} < number of invariants {s}")

    eigvals, eigvecs = np.linalg.eig(A.T)
    order = np.argsort(np.abs(eigvals - lam), kind="stable")
    real_cols: list[np.ndarray] = []
    used = np.zeros(len(eigvals), dtype=bool)
    for idx in order:
        if used[idx] or len(real_cols) >= span_size:
            continue
        used[idx] = True
        val, vec = eigvals[idx], eigvecs[:, idx]
        if abs(val.imag) <= 1e-12 * (1.0 + abs(val)):
            real_cols.append(vec.real)
        else:
            # pull in the conjugate partner so Re/Im span a real subspace
            penalty = np.where(used, np.inf, 0.0)
            partner = int(np.argmin(np.abs(eigvals - val.conjugate()) + penalty))
            used[partner] = True
            real_cols.append(vec.real)
            real_cols.append(vec.imag)

    B = np.column_stack(real_cols)
    U, sv, _ = np.linalg.svd(B, full_matrices=False)
    keep = sv > tol.cutoff(sv, B.shape)
    Q = U[:, keep]

    W = Q @ pseudo_inverse(Q.T @ D0, tol).T
    eig_res, dual_res = _residuals(W, A, D0, lam)
    return EigenfunctionSet(
        W=W,
        lam=float(lam),
        eig_residual=eig_res,
        duality_residual=dual_res,
        method="nearest_span",
        enforced=False,
        labels=tuple(labels),
    )


def evaluate_eigenfunctions(ef: EigenfunctionSet, dictionary, points) -> np.ndarray:
    """Values of every eigenfunction at the given states: row i is w_i^T psi."""
    return ef.W.T @ dictionary.evaluate(points)
