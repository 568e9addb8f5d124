"""Constraint sets defining the feasible subspace of invariant-consistent fits.

A fitted matrix A is *invariant-consistent* when it satisfies

    A D = Gplus        (geometric side: encoded states and their images)
    E^T A = Fplus^T    (functional side: encoded observables and their images)

Columns of D are the dictionary evaluated at states on known invariants
(fixed points, limit-cycle samples); the matching Gplus column is the
dictionary at the image of that state. Columns of E are coefficient vectors
of known functions of the state (eigenfunctions, delay-structure rows), with
Fplus carrying their images under the dynamics.

This module builds, merges, validates, and (de)serializes these sets, plus
the bookkeeping tags that remember which columns came from which invariant —
the spectral module needs that provenance to construct equalizers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConstraintError, DimensionError
from .linalg import DEFAULT_TOL, RankTolerance, matrix_rank, pseudo_inverse

FIXED_POINT = "FixedPoint"
LIMIT_CYCLE = "LimitCycle"


@dataclass(frozen=True)
class InvariantTag:
    """Provenance record for a block of geometric constraint columns.

    kind is FixedPoint or LimitCycle; columns [start, stop) index into D;
    state_points holds the underlying states as a (p, stop-start) array in
    orbit order (image of point j is point j+1 mod period). label is a free
    human-readable provenance string; tags sharing a label are treated as one
    family when results are grouped.
    """

    kind: str
    start: int
    stop: int
    state_points: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.kind not in (FIXED_POINT, LIMIT_CYCLE):
            raise DimensionError(f"unknown invariant kind {self.kind!r}")
        pts = np.asarray(self.state_points, dtype=float)
        if pts.ndim != 2:
            raise DimensionError("state_points must be a (p, q) array")
        object.__setattr__(self, "state_points", pts)
        if self.stop - self.start != pts.shape[1]:
            raise DimensionError(
                f"tag spans {self.stop - self.start} columns but has "
                f"{pts.shape[1]} state points"
            )

    @property
    def period(self) -> int:
        return self.stop - self.start

    def shifted(self, offset: int) -> "InvariantTag":
        return replace(self, start=self.start + offset, stop=self.stop + offset)


def _check_pair(first: np.ndarray, second: np.ndarray, names: str, m: int):
    if first.shape != second.shape:
        raise DimensionError(f"{names} must share a shape, got {first.shape} vs {second.shape}")
    if first.shape[0] != m:
        raise DimensionError(f"{names} must have m={m} rows, got {first.shape[0]}")
    if not (np.isfinite(first).all() and np.isfinite(second).all()):
        raise DimensionError(f"{names} contain non-finite entries")


@dataclass(frozen=True)
class ConstraintSet:
    """The four matrices (D, Gplus, E, Fplus) plus provenance tags.

    Immutable. Empty sides are represented by (m, 0) arrays, never None.
    """

    m: int
    D: np.ndarray
    Gplus: np.ndarray
    E: np.ndarray
    Fplus: np.ndarray
    tags: tuple[InvariantTag, ...] = ()

    def __post_init__(self):
        for name in ("D", "Gplus", "E", "Fplus"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2:
                arr = arr.reshape(self.m, -1)
            object.__setattr__(self, name, arr)
        _check_pair(self.D, self.Gplus, "D/Gplus", self.m)
        _check_pair(self.E, self.Fplus, "E/Fplus", self.m)
        object.__setattr__(self, "tags", tuple(self.tags))
        covered = sorted((t.start, t.stop) for t in self.tags)
        last = 0
        for start, stop in covered:
            if start < last or stop > self.g:
                raise DimensionError("tag column ranges overlap or exceed D")
            last = stop

    @property
    def g(self) -> int:
        return self.D.shape[1]

    @property
    def f(self) -> int:
        return self.E.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.g == 0 and self.f == 0

    # -- serialization ----------------------------------------------------

    def to_doc(self) -> dict:
        """JSON-ready document; matrices stored as lists of columns."""
        return {
            "m": self.m,
            "D": self.D.T.tolist(),
            "Gplus": self.Gplus.T.tolist(),
            "E": self.E.T.tolist(),
            "Fplus": self.Fplus.T.tolist(),
            "tags": [
                {
                    "kind": t.kind,
                    "start": t.start,
                    "stop": t.stop,
                    "state_points": t.state_points.T.tolist(),
                    "label": t.label,
                }
                for t in self.tags
            ],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ConstraintSet":
        try:
            m = int(doc["m"])
            mats = {}
            for name in ("D", "Gplus", "E", "Fplus"):
                cols = doc.get(name, [])
                mats[name] = (
                    np.asarray(cols, dtype=float).T if cols else np.zeros((m, 0))
                )
            tags = tuple(
                InvariantTag(
                    kind=t["kind"],
                    start=int(t["start"]),
                    stop=int(t["stop"]),
                    state_points=np.asarray(t["state_points"], dtype=float).T,
                    label=t.get("label", ""),
                )
                for t in doc.get("tags", [])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DimensionError(f"malformed constraint document: {exc}") from exc
        return cls(m=m, D=mats["D"], Gplus=mats["Gplus"], E=mats["E"], Fplus=mats["Fplus"], tags=tags)

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ConstraintSet":
        return cls.from_doc(json.loads(text))


def empty_constraints(m: int) -> ConstraintSet:
    """The unconstrained set: fitting against it degenerates to plain EDMD."""
    if m <= 0:
        raise DimensionError("m must be positive")
    z = np.zeros((m, 0))
    return ConstraintSet(m=m, D=z, Gplus=z.copy(), E=z.copy(), Fplus=z.copy())


# -- validation ------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking a constraint set against the solvability assumptions.

    All residuals are Frobenius norms; pass/fail is judged under the requested
    strictness: "strict" demands D and E have full column rank, "generalized"
    only needs the projection identities Gplus D+ D = Gplus and
    Fplus E+ E = Fplus (which full rank implies).
    """

    m: int
    g: int
    f: int
    strictness: str
    tol: float
    compatibility_residual: float
    d_rank: int
    e_rank: int
    generalized_d_residual: float
    generalized_e_residual: float
    passed: bool
    failures: tuple[str, ...]

    def render(self) -> str:
        lines = [
            f"constraint set: m={self.m}, g={self.g} geometric, {self.f} functional columns",
            f"compatibility residual |E^T Gplus - Fplus^T D| = {self.compatibility_residual:.3e}",
            f"rank(D) = {self.d_rank}/{self.g}, rank(E) = {self.e_rank}/{self.f}",
            f"generalized residuals: D-side {self.generalized_d_residual:.3e}, "
            f"E-side {self.generalized_e_residual:.3e}",
            f"verdict ({self.strictness}): {'PASS' if self.passed else 'FAIL'}",
        ]
        lines.extend(f"  - {msg}" for msg in self.failures)
        return "\n".join(lines)


def validate(
    cs: ConstraintSet,
    tol: float = 1e-8,
    strictness: str = "generalized",
    rank_tol: RankTolerance = DEFAULT_TOL,
) -> ValidationReport:
    """Check compatibility and (no-)redundancy assumptions of a constraint set.

    Compatibility requires E^T Gplus = Fplus^T D — without it the feasible set
    is empty. The residual is compared against tol scaled by the magnitude of
    the products involved. Failures are reported, never raised.
    """
    if strictness not in ("strict", "generalized"):
        raise DimensionError(f"unknown strictness {strictness!r}")

    lhs = cs.E.T @ cs.Gplus
    rhs = cs.Fplus.T @ cs.D
    compat = float(np.linalg.norm(lhs - rhs))
    compat_scale = 1.0 + max(np.linalg.norm(lhs), np.linalg.norm(rhs))

    d_rank = matrix_rank(cs.D, rank_tol)
    e_rank = matrix_rank(cs.E, rank_tol)

    gen_d = float(
        np.linalg.norm(cs.Gplus @ pseudo_inverse(cs.D, rank_tol) @ cs.D - cs.Gplus)
    )
    gen_e = float(
        np.linalg.norm(cs.Fplus @ pseudo_inverse(cs.E, rank_tol) @ cs.E - cs.Fplus)
    )

    failures = []
    if compat > tol * compat_scale:
        failures.append(
            f"incompatible: |E^T Gplus - Fplus^T D| = {compat:.6e} exceeds tolerance"
        )
    if strictness == "strict":
        if d_rank < cs.g:
            failures.append(f"D is column-rank-deficient ({d_rank} < {cs.g})")
        if e_rank < cs.f:
            failures.append(f"E is column-rank-deficient ({e_rank} < {cs.f})")
    else:
        if gen_d > tol * (1.0 + np.linalg.norm(cs.Gplus)):
            failures.append(
                f"Gplus not reproduced by projection onto range(D^T): residual {gen_d:.6e}"
            )
        if gen_e > tol * (1.0 + np.linalg.norm(cs.Fplus)):
            failures.append(
                f"Fplus not reproduced by projection onto range(E^T): residual {gen_e:.6e}"
            )

    return ValidationReport(
        m=cs.m,
        g=cs.g,
        f=cs.f,
        strictness=strictness,
        tol=tol,
        compatibility_residual=compat,
        d_rank=d_rank,
        e_rank=e_rank,
        generalized_d_residual=gen_d,
        generalized_e_residual=gen_e,
        passed=not failures,
        failures=tuple(failures),
    )


def require_valid(cs: ConstraintSet, tol: float = 1e-8, strictness: str = "generalized"):
    """Raise ConstraintError (carrying the report) if validation fails."""
    report = validate(cs, tol=tol, strictness=strictness)
    if not report.passed:
        raise ConstraintError(
            "constraint set failed validation:\n" + report.render(), report=report
        )
    return report


# -- builders ---------------------------------------------------------------


def from_fixed_points(dictionary, points) -> tuple[ConstraintSet, list[InvariantTag]]:
    """Encode fixed points: D columns = psi(point), Gplus = D (self-image).

    points is a (p, r) array of states (columns) or anything that converts to
    one; r = 0 gives the empty set. The dictionary only needs an
    ``evaluate(points) -> (m, r)`` method.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if dictionary.dim == 1 else pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise DimensionError("points must be a (p, r) array of state columns")
    m = dictionary.m
    if pts.shape[1] == 0:
        return empty_constraints(m), []
    D = dictionary.evaluate(pts)
    tags = [
        InvariantTag(
            kind=FIXED_POINT,
            start=j,
            stop=j + 1,
            state_points=pts[:, j : j + 1],
            label=f"fixed_point_{j}",
        )
        for j in range(pts.shape[1])
    ]
    z = np.zeros((m, 0))
    cs = ConstraintSet(m=m, D=D, Gplus=D.copy(), E=z, Fplus=z.copy(), tags=tuple(tags))
    return cs, tags


def from_limit_cycle(
    dictionary, orbit, label: str = ""
) -> tuple[ConstraintSet, InvariantTag]:
    """Encode a periodic orbit: Gplus column j = psi(orbit[j+1 mod q]).

    orbit is a (p, q) array of states in orbit order; the caller asserts the
    orbit is genuinely periodic (built-in systems compute orbits analytically
    and verify them against the flow). q = 1 coincides with a fixed point.
    """
    pts = np.asarray(orbit, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if dictionary.dim == 1 else pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[1] < 1:
        raise DimensionError("orbit must contain at least one state")
    q = pts.shape[1]
    D = dictionary.evaluate(pts)
    # image of point j is point j+1 (mod q): shift the evaluated columns left
    Gplus = np.roll(D, -1, axis=1)
    tag = InvariantTag(
        kind=LIMIT_CYCLE if q > 1 else FIXED_POINT,
        start=0,
        stop=q,
        state_points=pts,
        label=label or f"cycle_q{q}",
    )
    z = np.zeros((dictionary.m, 0))
    cs = ConstraintSet(
        m=dictionary.m, D=D, Gplus=Gplus, E=z, Fplus=z.copy(), tags=(tag,)
    )
    return cs, tag


def from_eigenfunction(coeffs, eigenvalue: float) -> ConstraintSet:
    """Encode a known eigenfunction e^T psi with real eigenvalue: E=e, Fplus=lam*e."""
    e = np.asarray(coeffs, dtype=float).reshape(-1, 1)
    if not np.isfinite(e).all():
        raise DimensionError("eigenfunction coefficients contain non-finite entries")
    if np.linalg.norm(e) == 0.0:
        raise DimensionError("eigenfunction coefficient vector is zero")
    m = e.shape[0]
    z = np.zeros((m, 0))
    return ConstraintSet(m=m, D=z, Gplus=z.copy(), E=e, Fplus=float(eigenvalue) * e)


def ho_dmd_constraints(sub_dictionary_size: int, delays: int) -> ConstraintSet:
    """Delay-embedding structure: forces the shifted-identity rows of A.

    For a stacked dictionary of d+1 delayed copies of an m-breve-sized base
    dictionary, the first m-breve*d rows of any feasible A are pinned to the
    pattern [0 I]: each delayed coordinate advances to the next-younger copy.
    Encoded purely on the functional side: E = [I; 0], Fplus = [0; I].
    """
    mb, d = int(sub_dictionary_size), int(delays)
    if mb <= 0 or d <= 0:
        raise DimensionError("need sub_dictionary_size >= 1 and delays >= 1")
    m = mb * (d + 1)
    k = mb * d
    E = np.vstack([np.eye(k), np.zeros((mb, k))])
    Fplus = np.vstack([np.zeros((mb, k)), np.eye(k)])
    z = np.zeros((m, 0))
    return ConstraintSet(m=m, D=z, Gplus=z.copy(), E=E, Fplus=Fplus)


def merge(a: ConstraintSet, b: ConstraintSet) -> ConstraintSet:
    """Concatenate two constraint sets over the same dictionary (same m)."""
    if a.m != b.m:
        raise DimensionError(f"cannot merge constraint sets with m={a.m} and m={b.m}")
    tags = a.tags + tuple(t.shifted(a.g) for t in b.tags)
    return ConstraintSet(
        m=a.m,
        D=np.hstack([a.D, b.D]),
        Gplus=np.hstack([a.Gplus, b.Gplus]),
        E=np.hstack([a.E, b.E]),
        Fplus=np.hstack([a.Fplus, b.Fplus]),
        tags=tags,
    )


def merge_all(sets) -> ConstraintSet:
    sets = list(sets)
    if not sets:
        raise DimensionError("merge_all needs at least one constraint set")
    out = sets[0]
    for cs in sets[1:]:
        out = merge(out, cs)
    return out


def drop_duplicate_columns(cs: ConstraintSet) -> ConstraintSet:
    """Drop exactly-duplicate constraint columns (opt-in; merge never dedupes).

    Geometric columns are deduplicated at tag granularity: a tag whose whole
    (D, Gplus) block bitwise-equals an earlier tag's block is dropped.
    Functional columns are deduplicated individually. Validation flags any
    remaining rank deficiency; silent near-duplicate removal is out of scope.
    """
    kept_tags: list[InvariantTag] = []
    keep_cols: list[int] = []
    seen_blocks: list[tuple[np.ndarray, np.ndarray]] = []
    for tag in cs.tags:
        block = (cs.D[:, tag.start : tag.stop], cs.Gplus[:, tag.start : tag.stop])
        duplicate = any(
            block[0].shape == d.shape and np.array_equal(block[0], d) and np.array_equal(block[1], g)
            for d, g in seen_blocks
        )
        if duplicate:
            continue
        seen_blocks.append(block)
        new_start = len(keep_cols)
        keep_cols.extend(range(tag.start, tag.stop))
        kept_tags.append(replace(tag, start=new_start, stop=new_start + tag.period))

    keep_func: list[int] = []
    for j in range(cs.f):
        pair = np.concatenate([cs.E[:, j], cs.Fplus[:, j]])
        dup = any(
            np.array_equal(pair, np.concatenate([cs.E[:, i], cs.Fplus[:, i]]))
            for i in keep_func
        )
        if not dup:
            keep_func.append(j)

    return ConstraintSet(
        m=cs.m,
        D=cs.D[:, keep_cols],
        Gplus=cs.Gplus[:, keep_cols],
        E=cs.E[:, keep_func],
        Fplus=cs.Fplus[:, keep_func],
        tags=tuple(kept_tags),
    )
