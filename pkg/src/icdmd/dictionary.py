"""Observable dictionaries: indicator partitions and a 1-D trigonometric basis.

A dictionary is an evaluatable vector of m observables over R^p. Two kinds are
provided:

* ``indicator``: the cells of a uniform partition of a box, one indicator
  observable per cell. A partition of unity, so the constant function is
  represented by the all-ones coefficient vector.
* ``trig``: {1, cos(j*pi*u'), sin(j*pi*u') : j = 1..K} on a rescaled interval
  (1-D only); the constant function is the first coordinate.

The constant_representer is what constraint builders use to encode "the
constant function is an eigenfunction at 1".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, UnsupportedError

MAX_OBSERVABLES = 100_000


def _normalize_bounds(bounds, dim: int) -> np.ndarray:
    b = np.asarray(bounds, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (dim, 1))
    if b.shape != (dim, 2) or not np.isfinite(b).all() or (b[:, 0] >= b[:, 1]).any():
        raise DimensionError(f"bounds must be {dim} finite [lo, hi] pairs with lo < hi")
    return b


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if dim == 1 else pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] != dim:
        raise DimensionError(f"points must be a ({dim}, n) array, got shape {pts.shape}")
    return pts


@dataclass(frozen=True)
class Dictionary:
    """An evaluatable observable vector with constant-function metadata."""

    kind: str
    dim: int
    m: int
    bounds: np.ndarray
    cells: tuple[int, ...] | None = None
    max_freq: int | None = None
    constant_representer: np.ndarray | None = field(default=None, repr=False)

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points inside the (closed) domain box."""
        pts = _as_points(points, self.dim)
        lo = self.bounds[:, 0][:, None]
        hi = self.bounds[:, 1][:, None]
        return ((pts >= lo) & (pts <= hi)).all(axis=0)

    def resolution(self) -> float:
        """The dictionary's spatial length scale.

        Indicator: the largest cell width. Trig: the shortest basis
        wavelength, (hi - lo) / K — truncated trigonometric approximations of
        a jump keep ringing for about one wavelength, so this is the distance
        within which values near a sharp boundary are basis artifacts. Used
        by diagnostics that must not demand sharper spatial detail than the
        basis can represent.
        """
        widths = self.bounds[:, 1] - self.bounds[:, 0]
        if self.kind == "indicator":
            return float(np.max(widths / np.asarray(self.cells)))
        return float(widths[0] / self.max_freq)

    def evaluate(self, points, policy: str = "error") -> np.ndarray:
        """Column j = psi(points[:, j]); shape (m, n).

        Out-of-domain points are rejected (policy="error", default) or clamped
        onto the box (policy="clamp"); callers that prefer to drop columns
        filter with contains() first.
        """
        pts = _as_points(points, self.dim)
        inside = self.contains(pts)
        if not inside.all():
            if policy == "error":
                bad = int(np.argmin(inside))
                raise DomainError(
                    f"{int((~inside).sum())} point(s) outside the dictionary domain "
                    f"(first at column {bad}: {pts[:, bad]})"
                )
            if policy == "clamp":
                lo = self.bounds[:, 0][:, None]
                hi = self.bounds[:, 1][:, None]
                pts = np.clip(pts, lo, hi)
            else:
                raise DimensionError(f"unknown out-of-domain policy {policy!r}")
        if self.kind == "indicator":
            return self._evaluate_indicator(pts)
        return self._evaluate_trig(pts)

    def cell_index(self, points) -> np.ndarray:
        """Per-axis cell indices, shape (dim, n). Indicator dictionaries only.

        Cells are half-open on the left, except the last cell per dimension,
        which is closed above so the box boundary belongs to a cell.
        """
        if self.kind != "indicator":
            raise UnsupportedError("cell_index is only defined for indicator dictionaries")
        pts = _as_points(points, self.dim)
        cells = np.asarray(self.cells)
        lo = self.bounds[:, 0][:, None]
        widths = (self.bounds[:, 1] - self.bounds[:, 0])[:, None]
        idx = np.floor((pts - lo) / widths * cells[:, None]).astype(int)
        return np.clip(idx, 0, (cells - 1)[:, None])

    def _evaluate_indicator(self, pts: np.ndarray) -> np.ndarray:
        idx = self.cell_index(pts)
        flat = np.ravel_multi_index(idx, tuple(self.cells))
        Z = np.zeros((self.m, pts.shape[1]))
        Z[flat, np.arange(pts.shape[1])] = 1.0
        return Z

    def _evaluate_trig(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds[0]
        u = (2.0 * pts[0] - (lo + hi)) / (hi - lo)  # rescale to [-1, 1]
        n = pts.shape[1]
        Z = np.empty((self.m, n))
        Z[0] = 1.0
        for j in range(1, self.max_freq + 1):
            Z[2 * j - 1] = np.cos(j * np.pi * u)
            Z[2 * j] = np.sin(j * np.pi * u)
        return Z

    def descriptor(self) -> dict:
        doc = {"kind": self.kind, "dim": self.dim, "m": self.m, "bounds": self.bounds.tolist()}
        if self.kind == "indicator":
            doc["cells"] = list(self.cells)
        else:
            doc["max_freq"] = self.max_freq
        return doc

    @classmethod
    def from_descriptor(cls, doc: dict) -> "Dictionary":
        try:
            kind = doc["kind"]
            bounds = doc["bounds"]
            if kind == "indicator":
                return indicator_dictionary(len(doc["cells"]), doc["cells"], bounds)
            if kind == "trig":
                return trig_dictionary(int(doc.get("dim", 1)), int(doc["max_freq"]), bounds)
        except (KeyError, TypeError, ValueError) as exc:
            raise DimensionError(f"malformed dictionary descriptor: {exc}") from exc
        raise DimensionError(f"unknown dictionary kind {doc.get('kind')!r}")


def indicator_dictionary(p: int, cells, bounds) -> Dictionary:
    """Indicator observables of a uniform partition of the box into cells.

    cells is one count per dimension (or a scalar, reused); m is their
    product. Every in-domain point activates exactly one observable.
    """
    if p < 1:
        raise DimensionError("dimension must be >= 1")
    counts = np.atleast_1d(np.asarray(cells, dtype=int))
    if counts.size == 1:
        counts = np.full(p, counts[0])
    if counts.size != p or (counts < 1).any():
        raise DimensionError(f"need {p} per-dimension cell counts >= 1, got {cells}")
    m = int(np.prod(counts))
    if m > MAX_OBSERVABLES:
        raise DimensionError(f"{m} observables exceeds the cap {MAX_OBSERVABLES}")
    return Dictionary(
        kind="indicator",
        dim=p,
        m=m,
        bounds=_normalize_bounds(bounds, p),
        cells=tuple(int(c) for c in counts),
        constant_representer=np.ones(m),
    )


def trig_dictionary(p: int, max_freq: int, bounds) -> Dictionary:
    """Constant plus cos/sin pairs up to max_freq on a rescaled interval."""
    if p != 1:
        raise UnsupportedError("trig dictionaries are 1-D only in this version")
    K = int(max_freq)
    if K < 1:
        raise DimensionError("max_freq must be >= 1")
    m = 2 * K + 1
    if m > MAX_OBSERVABLES:
        raise DimensionError(f"{m} observables exceeds the cap {MAX_OBSERVABLES}")
    constant = np.zeros(m)
    constant[0] = 1.0
    return Dictionary(
        kind="trig",
        dim=1,
        m=m,
        bounds=_normalize_bounds(bounds, 1),
        max_freq=K,
        constant_representer=constant,
    )
