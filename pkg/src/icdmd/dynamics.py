"""Benchmark ODE systems, fixed-step flow integration, and data assembly.

Four built-in systems with analytically known invariants drive every
experiment:

* ``cubic_multistable``: du = -(u + 1/2)(u - 0.2)(u - 0.7); three hyperbolic
  fixed points.
* ``cubic_halfstable``: du = (u + 1/2)(u - 0.2)^2 (u - 0.7); the middle fixed
  point is non-hyperbolic (half-stable).
* ``duffing``: du1 = u2, du2 = -u2 + u1 - 36 u1^3; two attracting foci at
  (+-1/6, 0) and a saddle at the origin.
* ``polar_limit_cycles``: dr = r (r - 1/3)(r - 2/3), dtheta = 2*pi; a stable
  limit cycle at r = 1/3, an unstable one at r = 2/3, an unstable focus at 0.

The discrete map is the time-k flow, integrated with classical fixed-step RK4
(vectorized over columns of states). All invariants (fixed points, orbits)
are supplied analytically so constraint sets are exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, DomainError, UnsupportedError

GRID_POINT_CAP = 2_000_000


@dataclass(frozen=True)
class OdeSystem:
    """A named autonomous vector field with its known invariant structure."""

    name: str
    dim: int
    vector_field: Callable[[np.ndarray], np.ndarray]
    known_fixed_points: np.ndarray  # (p, num_fixed_points)
    known_cycles: tuple[dict, ...] = ()
    invariant_partition: tuple[dict, ...] = ()
    default_k: float = 0.1

    def __post_init__(self):
        fps = np.asarray(self.known_fixed_points, dtype=float)
        if fps.ndim == 1:
            fps = fps.reshape(self.dim, -1)
        object.__setattr__(self, "known_fixed_points", fps)


def _cubic_multistable_field(u: np.ndarray) -> np.ndarray:
    x = u[0]
    return np.asarray([-(x + 0.5) * (x - 0.2) * (x - 0.7)])


def _cubic_halfstable_field(u: np.ndarray) -> np.ndarray:
    x = u[0]
    return np.asarray([(x + 0.5) * (x - 0.2) ** 2 * (x - 0.7)])


def _duffing_field(u: np.ndarray) -> np.ndarray:
    x, y = u[0], u[1]
    return np.asarray([y, -y + x - 36.0 * x**3])


def _polar_field(u: np.ndarray) -> np.ndarray:
    x, y = u[0], u[1]
    r = np.sqrt(x * x + y * y)
    g = (r - 1.0 / 3.0) * (r - 2.0 / 3.0)
    tau = 2.0 * np.pi
    return np.asarray([g * x - tau * y, g * y + tau * x])


_CUBIC_INTERVALS = (
    {"kind": "interval", "lo": -1.0, "hi": -0.5, "label": "interval[-1,-0.5]", "invariant_lo": False, "invariant_hi": True},
    {"kind": "interval", "lo": -0.5, "hi": 0.2, "label": "interval[-0.5,0.2]", "invariant_lo": True, "invariant_hi": True},
    {"kind": "interval", "lo": 0.2, "hi": 0.7, "label": "interval[0.2,0.7]", "invariant_lo": True, "invariant_hi": True},
    {"kind": "interval", "lo": 0.7, "hi": 1.0, "label": "interval[0.7,1]", "invariant_lo": True, "invariant_hi": False},
)

_BUILTINS: dict[str, OdeSystem] = {}


def _register(sys: OdeSystem):
    _BUILTINS[sys.name] = sys
    return sys


_register(
    OdeSystem(
        name="cubic_multistable",
        dim=1,
        vector_field=_cubic_multistable_field,
        known_fixed_points=np.array([[-0.5, 0.2, 0.7]]),
        invariant_partition=_CUBIC_INTERVALS,
        default_k=0.1,
    )
)
_register(
    OdeSystem(
        name="cubic_halfstable",
        dim=1,
        vector_field=_cubic_halfstable_field,
        known_fixed_points=np.array([[-0.5, 0.2, 0.7]]),
        invariant_partition=_CUBIC_INTERVALS,
        default_k=0.1,
    )
)
_register(
    OdeSystem(
        name="duffing",
        dim=2,
        vector_field=_duffing_field,
        known_fixed_points=np.array([[-1.0 / 6.0, 0.0, 1.0 / 6.0], [0.0, 0.0, 0.0]]),
        invariant_partition=(
            {"kind": "basin", "attractor": (-1.0 / 6.0, 0.0), "label": "basin(-1/6,0)"},
            {"kind": "basin", "attractor": (1.0 / 6.0, 0.0), "label": "basin(+1/6,0)"},
        ),
        default_k=1.6,
    )
)
_register(
    OdeSystem(
        name="polar_limit_cycles",
        dim=2,
        vector_field=_polar_field,
        known_fixed_points=np.array([[0.0], [0.0]]),
        known_cycles=(
            {"radius": 1.0 / 3.0, "period_time": 1.0, "stable": True},
            {"radius": 2.0 / 3.0, "period_time": 1.0, "stable": False},
        ),
        invariant_partition=(
            {"kind": "annulus", "r_lo": 0.0, "r_hi": 1.0 / 3.0, "label": "annulus(0,1/3)", "invariant_lo": True, "invariant_hi": True},
            {"kind": "annulus", "r_lo": 1.0 / 3.0, "r_hi": 2.0 / 3.0, "label": "annulus(1/3,2/3)", "invariant_lo": True, "invariant_hi": True},
            {"kind": "annulus", "r_lo": 2.0 / 3.0, "r_hi": np.inf, "label": "annulus(2/3,inf)", "invariant_lo": True, "invariant_hi": False},
        ),
        default_k=1.0 / 6.0,
    )
)


def builtin(name: str) -> OdeSystem:
    """Look up one of the built-in benchmark systems by name."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise DimensionError(
            f"unknown system {name!r}; available: {sorted(_BUILTINS)}"
        ) from None


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


def flow(sys: OdeSystem, state, k: float, substeps: int = 50) -> np.ndarray:
    """Advance states by time k with classical RK4 in `substeps` equal steps.

    state is (p,) or (p, n); the result matches. Raises DomainError with the
    offending substep index if the integration produces non-finite values.
    """
    if substeps < 1:
        raise DimensionError("substeps must be >= 1")
    if k <= 0:
        raise DimensionError("time step k must be positive")
    u = np.asarray(state, dtype=float)
    single = u.ndim == 1
    if single:
        u = u[:, None]
    if u.shape[0] != sys.dim:
        raise DimensionError(f"{sys.name} is {sys.dim}-D, got state shape {u.shape}")
    h = k / substeps
    f = sys.vector_field
    for step in range(substeps):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(u).all():
            raise DomainError(f"integration blew up at substep {step + 1}/{substeps}")
    return u[:, 0] if single else u


def periodic_orbit(
    sys: OdeSystem,
    cycle_index: int = 0,
    k: float | None = None,
    phase: float = 0.0,
    substeps: int = 50,
    verify: bool = True,
    tol: float = 1e-8,
) -> np.ndarray:
    """Analytic period-q orbit of a built-in cycle, as a (p, q) array.

    Only the polar system carries analytic cycles: the angle advances by
    exactly 2*pi*k per step, so with k dividing the period the orbit is the
    rotation orbit r*(cos(phase + 2*pi*k*j), sin(...)). By default the result
    is cross-checked against the integrator (each point must flow to its
    successor within tol).
    """
    if not sys.known_cycles:
        raise UnsupportedError(f"{sys.name} has no analytic limit cycles")
    if not 0 <= cycle_index < len(sys.known_cycles):
        raise DimensionError(f"cycle_index {cycle_index} out of range")
    cyc = sys.known_cycles[cycle_index]
    if k is None:
        k = sys.default_k
    q_exact = cyc["period_time"] / k
    q = int(round(q_exact))
    if q < 1 or abs(q_exact - q) > 1e-9:
        raise DimensionError(
            f"time step k={k} does not divide the cycle period {cyc['period_time']}"
        )
    j = np.arange(q)
    angles = phase + 2.0 * np.pi * k * j
    orbit = cyc["radius"] * np.vstack([np.cos(angles), np.sin(angles)])
    if verify:
        images = flow(sys, orbit, k, substeps)
        expected = np.roll(orbit, -1, axis=1)
        err = float(np.max(np.linalg.norm(images - expected, axis=0)))
        if err > tol:
            raise DomainError(
                f"analytic orbit failed the integrator cross-check (error {err:.3e})"
            )
    return orbit


@dataclass(frozen=True)
class SamplingPlan:
    """Equi-spaced, cell-centered tensor sampling of a box."""

    bounds: np.ndarray  # (p, 2)
    counts: tuple[int, ...]
    k: float
    substeps: int = 50

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim == 1:
            b = b.reshape(1, 2)
        object.__setattr__(self, "bounds", b)
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        object.__setattr__(self, "counts", counts)
        if b.shape != (len(counts), 2):
            raise DimensionError("bounds and counts must agree on dimension")
        if any(c < 2 for c in counts):
            raise DimensionError("need at least 2 samples per dimension")
        if self.k <= 0 or self.substeps < 1:
            raise DimensionError("need k > 0 and substeps >= 1")

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return int(np.prod(self.counts))


def sample_grid(plan: SamplingPlan) -> np.ndarray:
    """Cell-centered tensor grid as a (p, n) array of state columns.

    Points are offset half a cell from every boundary, so they lie strictly
    inside the box and never on an indicator cell face.
    """
    if plan.n > GRID_POINT_CAP:
        raise DimensionError(f"grid of {plan.n} points exceeds the cap {GRID_POINT_CAP}")
    axes = []
    for (lo, hi), c in zip(plan.bounds, plan.counts):
        width = (hi - lo) / c
        axes.append(lo + width * (np.arange(c) + 0.5))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.vstack([m.reshape(1, -1) for m in mesh])


@dataclass(frozen=True)
class DataMatrices:
    """Snapshot pair (X, Y) with bookkeeping from escape handling."""

    X: np.ndarray
    Y: np.ndarray
    points: np.ndarray  # surviving sample states, (p, n)
    dropped: int


def build_data_matrices(
    dictionary, sys: OdeSystem, plan: SamplingPlan, policy: str = "drop"
) -> DataMatrices:
    """Evaluate the dictionary on grid points and on their time-k images.

    Images that leave the dictionary domain are handled per policy:
    "drop" (default) removes those sample columns and reports the count,
    "clamp" projects them onto the box, "error" raises.
    """
    if policy not in ("drop", "clamp", "error"):
        raise DimensionError(f"unknown escape policy {policy!r}")
    points = sample_grid(plan)
    images = flow(sys, points, plan.k, plan.substeps)
    inside = dictionary.contains(images)
    dropped = int((~inside).sum())
    if policy == "error" and dropped:
        raise DomainError(f"{dropped} image(s) escaped the dictionary domain")
    if policy == "drop" and dropped:
        points = points[:, inside]
        images = images[:, inside]
        dropped_count = dropped
    else:
        dropped_count = 0 if policy == "drop" else dropped
    X = dictionary.evaluate(points)
    Y = dictionary.evaluate(images, policy="clamp" if policy == "clamp" else "error")
    return DataMatrices(X=X, Y=Y, points=points, dropped=dropped_count)
