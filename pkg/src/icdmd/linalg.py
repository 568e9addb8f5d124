"""Shared linear-algebra primitives.

Everything here is a thin, contract-carrying wrapper over numpy's SVD-based
routines. The wrappers exist so that the one rank-tolerance convention and the
one min-norm convention used across the package live in a single place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class RankTolerance:
    """Cutoff rule for deciding which singular values count as nonzero.

    A singular value s of a matrix M counts as nonzero when

        s > max(rtol * smax, atol)

    where smax is the largest singular value of M. rtol=None means the numpy
    default max(M.shape) * eps. atol is an absolute floor (default 0).
    """

    rtol: float | None = None
    atol: float = 0.0

    def cutoff(self, singular_values: np.ndarray, shape: tuple[int, int]) -> float:
        if singular_values.size == 0:
            return self.atol
        smax = float(singular_values[0])
        rtol = self.rtol
        if rtol is None:
            rtol = max(shape) * np.finfo(float).eps
        return max(rtol * smax, self.atol)


DEFAULT_TOL = RankTolerance()


def _as_2d(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={M.ndim}")
    return M


def matrix_rank(M: np.ndarray, tol: RankTolerance = DEFAULT_TOL) -> int:
    """Numerical rank of M under the package rank-tolerance convention."""
    M = _as_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.count_nonzero(s > tol.cutoff(s, M.shape)))


def pseudo_inverse(M: np.ndarray, tol: RankTolerance = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with the shared rank cutoff.

    Singular values at or below the cutoff are treated as exactly zero (their
    reciprocals are not formed), so e.g. diag(2, 0) maps to diag(0.5, 0).
    Empty matrices are fine: the pseudoinverse of an (m, 0) matrix is the
    (0, m) zero matrix.
    """
    M = _as_2d(M)
    m, n = M.shape
    if m == 0 or n == 0:
        return np.zeros((n, m))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cut = DEFAULT_TOL.cutoff(s, M.shape) if tol is None else tol.cutoff(s, M.shape)
    keep = s > cut
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def orthonormal_complement_basis(
    M: np.ndarray, tol: RankTolerance = DEFAULT_TOL
) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of range(M).

    For M of shape (m, k) returns Q of shape (m, m - rank(M)) with
    Q^T Q = I and M^T Q = 0. An empty M (k = 0) has full complement: Q is
    an (m, m) orthogonal matrix (the identity, by convention).
    """
    M = _as_2d(M)
    m, k = M.shape
    if m == 0:
        return np.zeros((0, 0))
    if k == 0:
        return np.eye(m)
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    r = int(np.count_nonzero(s > tol.cutoff(s, M.shape)))
    return U[:, r:]


def min_norm_right_lstsq(
    C: np.ndarray, B: np.ndarray, tol: RankTolerance = DEFAULT_TOL
) -> np.ndarray:
    """Minimum-Frobenius-norm solution X of the right-sided problem

        minimize ||X C - B||_F   over X

    i.e. X = B C^+. C has shape (k, n), B has shape (s, n); X is (s, k).
    Among all minimizers this is the one of least Frobenius norm.
    """
    C = _as_2d(C, "C")
    B = _as_2d(B, "B")
    if C.shape[1] != B.shape[1]:
        raise DimensionError(
            f"C and B need matching column counts, got {C.shape} vs {B.shape}"
        )
    return B @ pseudo_inverse(C, tol)
