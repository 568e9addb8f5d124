"""End-to-end experiments: sample, constrain, fit, extract, evaluate, score.

An experiment takes one built-in system, builds snapshot data on an
equi-spaced grid, encodes the system's known invariants as constraints, fits
one or more model variants on the *same* data,

    edmd                 unconstrained baseline
    icdmd_constant_only  only the constant function pinned at eigenvalue 1
    icdmd_full           every fixed point, limit cycle, and the constant

extracts eigenfunctions at 1 (duality-induced for the fully constrained
model, nearest-eigenvalue span fit for the baselines), evaluates them on an
output grid, and scores how constant each function is on each known invariant
region.

Scoring details that matter for interpretation:

* Grid points within one dictionary resolution of an invariant-set boundary
  are excluded from region statistics. The dictionaries cannot resolve
  features sharper than a cell (or half a trig wavelength), so cells that
  straddle a boundary carry mixed values by construction; the invariance
  claim concerns the region interiors.
* Functions sharing a provenance label (e.g. the four encoded orbits of one
  limit cycle) are summed before scoring. Each orbit's own function resolves
  that orbit's angular sectors; their sum is the level-set estimate for the
  whole cycle's annulus.
* Basin regions (Duffing) have no analytic boundary: grid points are
  classified by integrating until they settle near an attractor, and any
  point with a differently-classified neighbor within one resolution is
  excluded (the simulation analogue of the boundary margin).
"""

from __future__ import annotations

import json
import sys as _sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constraints import (
    ConstraintSet,
    empty_constraints,
    from_eigenfunction,
    from_fixed_points,
    from_limit_cycle,
    merge,
    merge_all,
)
from .dictionary import Dictionary, indicator_dictionary, trig_dictionary
from .dynamics import (
    DataMatrices,
    OdeSystem,
    SamplingPlan,
    build_data_matrices,
    builtin,
    builtin_names,
    flow,
    periodic_orbit,
    sample_grid,
)
from .errors import ConfigError, IcdmdError
from .solver import ICDMDModel, solve_edmd, solve_icdmd
from .spectral import (
    EigenfunctionSet,
    Equalizer,
    build_equalizer,
    edmd_nearest_span_fit,
    evaluate_eigenfunctions,
    induced_eigenfunctions,
)

MODEL_NAMES = ("edmd", "icdmd_constant_only", "icdmd_full")
RECIPE_ITEMS = ("fixed_points", "limit_cycles", "constant_function")


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully-resolved experiment description (JSON/TOML-loadable)."""

    system: str
    dictionary: dict
    sample_counts: tuple[int, ...]
    k: float | None = None
    bounds: tuple | None = None
    substeps: int = 50
    constraint_recipe: tuple[str, ...] = ("fixed_points", "constant_function")
    orbits_per_cycle: int = 4
    cycle_phases: str = "equispaced"
    models: tuple[str, ...] = ("icdmd_full",)
    output_counts: tuple[int, ...] | None = None
    escape_policy: str = "drop"
    seed: int = 0
    duffing_band: float = 0.4
    label: str = ""

    _FIELDS = (
        "system", "dictionary", "sample_counts", "k", "bounds", "substeps",
        "constraint_recipe", "orbits_per_cycle", "cycle_phases", "models",
        "output_counts", "escape_policy", "seed", "duffing_band", "label",
    )

    def __post_init__(self):
        object.__setattr__(self, "sample_counts", tuple(int(c) for c in self.sample_counts))
        object.__setattr__(self, "constraint_recipe", tuple(self.constraint_recipe))
        object.__setattr__(self, "models", tuple(self.models))
        if self.output_counts is not None:
            object.__setattr__(self, "output_counts", tuple(int(c) for c in self.output_counts))
        if self.bounds is not None:
            object.__setattr__(self, "bounds", tuple(tuple(float(v) for v in b) for b in self.bounds))
        for name in self.models:
            if name not in MODEL_NAMES:
                raise ConfigError(f"unknown model {name!r}; choose from {MODEL_NAMES}")
        for item in self.constraint_recipe:
            if item not in RECIPE_ITEMS:
                raise ConfigError(f"unknown constraint recipe item {item!r}; choose from {RECIPE_ITEMS}")
        if self.cycle_phases not in ("equispaced", "random"):
            raise ConfigError("cycle_phases must be 'equispaced' or 'random'")
        if self.escape_policy not in ("drop", "clamp", "error"):
            raise ConfigError("escape_policy must be drop, clamp, or error")
        if not self.models:
            raise ConfigError("need at least one model")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls._FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "system" not in data or "dictionary" not in data or "sample_counts" not in data:
            raise ConfigError("config needs at least: system, dictionary, sample_counts")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".toml":
            if _sys.version_info >= (3, 11):
                import tomllib as toml_mod
            else:
                import tomli as toml_mod
            try:
                data = toml_mod.loads(text)
            except toml_mod.TOMLDecodeError as exc:
                raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "dictionary": dict(self.dictionary),
            "sample_counts": list(self.sample_counts),
            "k": self.k,
            "bounds": [list(b) for b in self.bounds] if self.bounds else None,
            "substeps": self.substeps,
            "constraint_recipe": list(self.constraint_recipe),
            "orbits_per_cycle": self.orbits_per_cycle,
            "cycle_phases": self.cycle_phases,
            "models": list(self.models),
            "output_counts": list(self.output_counts) if self.output_counts else None,
            "escape_policy": self.escape_policy,
            "seed": self.seed,
            "duffing_band": self.duffing_band,
            "label": self.label,
        }


def preset_config(system: str, scale: str = "desk") -> ExperimentConfig:
    """The documented demo configuration for a built-in system.

    Desk scales finish in seconds; paper scales match the published sample
    and dictionary sizes (within the approximations the text states) and are
    provided for completeness, not exercised by the test suite.
    """
    if system not in builtin_names():
        raise ConfigError(f"unknown system {system!r}; available: {builtin_names()}")
    if scale not in ("desk", "paper"):
        raise ConfigError(f"unknown scale {scale!r}; choose desk or paper")
    desk = scale == "desk"
    if system == "cubic_multistable":
        # trig basis: the three-model comparison needs a dictionary in which
        # the unconstrained fit is genuinely approximate
        return ExperimentConfig(
            system=system,
            dictionary={"kind": "trig", "max_freq": 15},
            sample_counts=(1201,) if desk else (10001,),
            models=MODEL_NAMES,
            label=f"{system}_{scale}",
        )
    if system == "cubic_halfstable":
        return ExperimentConfig(
            system=system,
            dictionary={"kind": "indicator", "cells": [31] if desk else [61]},
            sample_counts=(1201,) if desk else (12001,),
            models=("icdmd_full",),
            label=f"{system}_{scale}",
        )
    if system == "duffing":
        return ExperimentConfig(
            system=system,
            dictionary={"kind": "indicator", "cells": [21, 21] if desk else [35, 35]},
            sample_counts=(81, 81) if desk else (176, 176),
            models=("icdmd_full",),
            label=f"{system}_{scale}",
        )
    return ExperimentConfig(
        system="polar_limit_cycles",
        dictionary={"kind": "indicator", "cells": [21, 21] if desk else [51, 51]},
        sample_counts=(81, 81) if desk else (114, 114),
        constraint_recipe=("fixed_points", "limit_cycles", "constant_function"),
        models=("icdmd_full",),
        label=f"polar_limit_cycles_{scale}",
    )


@contextmanager
def _stage(name: str):
    """Label any library error with the pipeline stage it came from."""
    try:
        yield
    except IcdmdError as exc:
        raise type(exc)(f"[stage: {name}] {exc}") from exc


# -- region classification and scoring --------------------------------------


@dataclass(frozen=True)
class RegionClassification:
    """Region membership of output-grid points; -1 marks excluded points."""

    membership: np.ndarray  # (n,) int
    labels: tuple[str, ...]

    @property
    def counts(self) -> np.ndarray:
        return np.array([(self.membership == i).sum() for i in range(len(self.labels))])


def _classify_basins(
    sys: OdeSystem, points: np.ndarray, k: float, capture_radius: float = 0.1
) -> np.ndarray:
    """Label each point by the attractor its trajectory settles at (-1: neither)."""
    attractors = np.array(
        [r["attractor"] for r in sys.invariant_partition if r["kind"] == "basin"]
    ).T  # (p, num_basins)
    horizon_steps = max(1, int(np.ceil(96.0 / k)))
    state = points
    for _ in range(horizon_steps):
        state = flow(sys, state, k, substeps=25)
    dists = np.linalg.norm(state[:, None, :] - attractors[:, :, None], axis=0)
    nearest = np.argmin(dists, axis=0)
    label = np.where(dists[nearest, np.arange(points.shape[1])] <= capture_radius, nearest, -1)
    return label.astype(int)


def _exclude_disagreeing_neighbors(
    points: np.ndarray, labels: np.ndarray, radius: float
) -> np.ndarray:
    """Mark classified points that sit within `radius` of a different label."""
    n = points.shape[1]
    out = labels.copy()
    chunk = 512
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        d = np.linalg.norm(points[:, :, None] - points[:, None, sl], axis=0)  # (n, chunk)
        near = d <= radius
        disagree = labels[:, None] != labels[None, sl]
        out[sl][np.any(near & disagree, axis=0)] = -1
    return out


def _exclude_boundary_cells(
    cell_idx: np.ndarray, labels: np.ndarray, out_of_band: np.ndarray | None = None
) -> np.ndarray:
    """Mark points whose cell is the same as, or adjacent to, a cell holding
    a differently-labeled point.

    Model values are constant on dictionary cells, so a classification
    boundary cannot be located more finely than the cell it crosses; that
    cell and its neighbors (one-cell buffer for the transition kernel's
    within-cell dispersion) carry mixed values and are unscorable. Points
    beyond `out_of_band` still disqualify their neighbors before being
    dropped themselves.
    """
    n = labels.shape[0]
    out = labels.copy()
    classified = np.where(labels >= 0)[0]
    idx = cell_idx[:, classified]
    lab = labels[classified]
    chunk = 512
    for start in range(0, classified.size, chunk):
        sl = slice(start, min(start + chunk, classified.size))
        cheb = np.abs(idx[:, :, None] - idx[:, None, sl]).max(axis=0)  # (nc, chunk)
        disagree = lab[:, None] != lab[None, sl]
        bad = np.any((cheb <= 1) & disagree, axis=0)
        out[classified[sl][bad]] = -1
    if out_of_band is not None:
        out[out_of_band] = -1
    return out


def classify_regions(
    sys: OdeSystem,
    points: np.ndarray,
    dictionary: Dictionary,
    k: float,
    band: float | None = None,
) -> RegionClassification:
    """Assign output-grid points to the system's known invariant regions.

    Interval and annulus regions are shrunk by one dictionary resolution at
    every boundary that is itself an invariant set (fixed points, cycle radii
    — where level sets jump and basis functions straddle); domain-box edges
    are not shrunk. Basin regions are classified by simulation, restricted to
    |u1| <= band; points near the simulated boundary are excluded by cell
    adjacency for indicator dictionaries (the boundary is only localizable to
    a cell) and by a one-resolution disagreement radius otherwise.
    """
    if not sys.invariant_partition:
        return RegionClassification(
            membership=np.full(points.shape[1], -1, dtype=int), labels=()
        )
    resolution = dictionary.resolution()
    kinds = {r["kind"] for r in sys.invariant_partition}
    labels = tuple(r["label"] for r in sys.invariant_partition)
    membership = np.full(points.shape[1], -1, dtype=int)

    if kinds == {"interval"}:
        x = points[0]
        for i, r in enumerate(sys.invariant_partition):
            lo = r["lo"] + resolution if r["invariant_lo"] else r["lo"]
            hi = r["hi"] - resolution if r["invariant_hi"] else r["hi"]
            membership[(x > lo) & (x < hi)] = i
    elif kinds == {"annulus"}:
        rad = np.linalg.norm(points, axis=0)
        for i, r in enumerate(sys.invariant_partition):
            lo = r["r_lo"] + resolution if r["invariant_lo"] else r["r_lo"]
            hi = r["r_hi"] - resolution if (r["invariant_hi"] and np.isfinite(r["r_hi"])) else r["r_hi"]
            membership[(rad > lo) & (rad < hi)] = i
    elif kinds == {"basin"}:
        membership = _classify_basins(sys, points, k)
        out_of_band = None
        if band is not None:
            out_of_band = np.abs(points[0]) > band
        if dictionary.kind == "indicator":
            inside = dictionary.contains(points)
            cell_idx = np.zeros((dictionary.dim, points.shape[1]), dtype=int)
            if inside.any():
                cell_idx[:, inside] = dictionary.cell_index(points[:, inside])
            membership[~inside] = -1
            membership = _exclude_boundary_cells(cell_idx, membership, out_of_band)
        else:
            membership = _exclude_disagreeing_neighbors(points, membership, resolution)
            if out_of_band is not None:
                membership[out_of_band] = -1
    else:
        raise ConfigError(f"cannot score mixed region kinds {sorted(kinds)}")
    return RegionClassification(membership=membership, labels=labels)


@dataclass(frozen=True)
class InvarianceDiagnostics:
    """Per-function, per-region constancy statistics for one model.

    normalized_stddev[i, j] is the standard deviation of function i over the
    scored points of region j, divided by function i's global range on the
    whole output grid (a range below 1e-12 scores 0 — the function is
    globally constant). NaN marks regions with no scored points; those are
    listed in empty_regions rather than failing the run.
    """

    function_labels: tuple[str, ...]
    region_labels: tuple[str, ...]
    normalized_stddev: np.ndarray  # (F, R)
    region_mean: np.ndarray  # (F, R)
    global_range: np.ndarray  # (F,)
    region_counts: np.ndarray  # (R,)
    empty_regions: tuple[str, ...]
    duality_matrix: np.ndarray | None = None
    eig_residual: float | None = None
    duality_residual: float | None = None
    level_set_measures: np.ndarray | None = None

    def worst_score(self) -> float:
        finite = self.normalized_stddev[np.isfinite(self.normalized_stddev)]
        return float(finite.max()) if finite.size else float("nan")

    def mean_score(self) -> float:
        finite = self.normalized_stddev[np.isfinite(self.normalized_stddev)]
        return float(finite.mean()) if finite.size else float("nan")

    def to_doc(self) -> dict:
        return {
            "function_labels": list(self.function_labels),
            "region_labels": list(self.region_labels),
            "normalized_stddev": self.normalized_stddev.tolist(),
            "region_mean": self.region_mean.tolist(),
            "global_range": self.global_range.tolist(),
            "region_counts": self.region_counts.tolist(),
            "empty_regions": list(self.empty_regions),
            "duality_matrix": None if self.duality_matrix is None else self.duality_matrix.tolist(),
            "eig_residual": self.eig_residual,
            "duality_residual": self.duality_residual,
            "level_set_measures": None if self.level_set_measures is None else self.level_set_measures.tolist(),
        }


def invariance_score(
    values: np.ndarray,
    classification: RegionClassification,
    function_labels=None,
) -> InvarianceDiagnostics:
    """Within-region constancy of each function, normalized by global range."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    nf, n = values.shape
    if n != classification.membership.shape[0]:
        raise ConfigError("values and classification disagree on grid size")
    labels = tuple(function_labels) if function_labels else tuple(f"f{i}" for i in range(nf))
    nr = len(classification.labels)
    stddev = np.full((nf, nr), np.nan)
    mean = np.full((nf, nr), np.nan)
    rng = values.max(axis=1) - values.min(axis=1)
    empty = []
    for j in range(nr):
        mask = classification.membership == j
        if not mask.any():
            empty.append(classification.labels[j])
            continue
        sub = values[:, mask]
        mean[:, j] = sub.mean(axis=1)
        sd = sub.std(axis=1)
        stddev[:, j] = np.where(rng > 1e-12, sd / np.maximum(rng, 1e-300), 0.0)
    return InvarianceDiagnostics(
        function_labels=labels,
        region_labels=classification.labels,
        normalized_stddev=stddev,
        region_mean=mean,
        global_range=rng,
        region_counts=classification.counts,
        empty_regions=tuple(empty),
    )


def group_by_label(values: np.ndarray, labels) -> tuple[np.ndarray, tuple[str, ...]]:
    """Sum rows of `values` that share a provenance label (first-seen order)."""
    labels = list(labels)
    order: list[str] = []
    for lab in labels:
        if lab not in order:
            order.append(lab)
    grouped = np.vstack(
        [values[[i for i, lab in enumerate(labels) if lab == g]].sum(axis=0) for g in order]
    )
    return grouped, tuple(order)


# -- the experiment runner ---------------------------------------------------


@dataclass(frozen=True)
class ModelRecord:
    """Everything produced for one model variant of an experiment."""

    name: str
    A: np.ndarray
    model: ICDMDModel | None
    eigenfunctions: EigenfunctionSet | None
    grid_values: np.ndarray | None
    grouped_values: np.ndarray | None
    grouped_labels: tuple[str, ...]
    diagnostics: InvarianceDiagnostics | None
    residual: float
    fit_seconds: float

    def to_doc(self, dictionary: Dictionary | None = None) -> dict:
        if self.model is not None:
            doc = self.model.to_doc(dictionary)
        else:
            doc = {
                "A": self.A.T.tolist(),
                "residual": self.residual,
                "objective": self.residual**2,
                "constraints": empty_constraints(self.A.shape[0]).to_doc(),
            }
            if dictionary is not None:
                doc["dictionary"] = dictionary.descriptor()
        if self.eigenfunctions is not None:
            doc["eigenfunctions"] = self.eigenfunctions.to_doc()
        return doc


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    system: OdeSystem
    dictionary: Dictionary
    data: DataMatrices
    grid: np.ndarray
    classification: RegionClassification
    constraints_geometric: ConstraintSet | None
    equalizer: Equalizer | None
    models: dict[str, ModelRecord] = field(default_factory=dict)


def _build_dictionary(cfg: ExperimentConfig, bounds) -> Dictionary:
    desc = dict(cfg.dictionary)
    kind = desc.get("kind")
    dict_bounds = desc.get("bounds", bounds)
    db = np.asarray(dict_bounds, dtype=float).reshape(-1, 2)
    sb = np.asarray(bounds, dtype=float).reshape(-1, 2)
    if db.shape != sb.shape or (db[:, 0] > sb[:, 0]).any() or (db[:, 1] < sb[:, 1]).any():
        raise ConfigError("dictionary bounds must cover the sampling bounds")
    if kind == "indicator":
        cells = desc.get("cells")
        if cells is None:
            raise ConfigError("indicator dictionary config needs 'cells'")
        return indicator_dictionary(len(db), cells, db)
    if kind == "trig":
        if "max_freq" not in desc:
            raise ConfigError("trig dictionary config needs 'max_freq'")
        return trig_dictionary(len(db), int(desc["max_freq"]), db)
    raise ConfigError(f"unknown dictionary kind {kind!r}")


def _build_constraints(
    cfg: ExperimentConfig, sys: OdeSystem, dictionary: Dictionary, rng: np.random.Generator
) -> tuple[ConstraintSet | None, ConstraintSet | None]:
    """Returns (geometric set with tags, functional constant set); None if absent."""
    geometric_sets = []
    if "fixed_points" in cfg.constraint_recipe and sys.known_fixed_points.shape[1]:
        cs_fp, _ = from_fixed_points(dictionary, sys.known_fixed_points)
        geometric_sets.append(cs_fp)
    if "limit_cycles" in cfg.constraint_recipe:
        if not sys.known_cycles:
            raise ConfigError(f"{sys.name} has no limit cycles to encode")
        k = cfg.k if cfg.k is not None else sys.default_k
        step_angle = 2.0 * np.pi * k
        for ci, cyc in enumerate(sys.known_cycles):
            if cfg.cycle_phases == "equispaced":
                phases = step_angle * np.arange(cfg.orbits_per_cycle) / cfg.orbits_per_cycle
            else:
                phases = rng.uniform(0.0, step_angle, cfg.orbits_per_cycle)
            for phase in phases:
                orbit = periodic_orbit(sys, ci, k=k, phase=float(phase), substeps=cfg.substeps)
                cs_cyc, _ = from_limit_cycle(
                    dictionary, orbit, label=f"cycle_r{cyc['radius']:.4g}"
                )
                geometric_sets.append(cs_cyc)
    geometric = merge_all(geometric_sets) if geometric_sets else None
    functional = None
    if "constant_function" in cfg.constraint_recipe:
        functional = from_eigenfunction(dictionary.constant_representer, 1.0)
    return geometric, functional


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run one experiment; deterministic (bitwise on matrices) given the seed."""
    rng = np.random.default_rng(cfg.seed)

    with _stage("config"):
        if cfg.system not in builtin_names():
            raise ConfigError(f"unknown system {cfg.system!r}; available: {builtin_names()}")
        system = builtin(cfg.system)
        k = cfg.k if cfg.k is not None else system.default_k
        bounds = cfg.bounds if cfg.bounds is not None else tuple(
            (-1.0, 1.0) for _ in range(system.dim)
        )
        if len(bounds) != system.dim:
            raise ConfigError(f"{cfg.system} is {system.dim}-D but bounds has {len(bounds)} entries")
        dictionary = _build_dictionary(cfg, bounds)
        if len(cfg.sample_counts) != system.dim:
            raise ConfigError("sample_counts dimension mismatch")

    with _stage("sampling"):
        plan = SamplingPlan(bounds=np.asarray(bounds), counts=cfg.sample_counts, k=k, substeps=cfg.substeps)
        data = build_data_matrices(dictionary, system, plan, policy=cfg.escape_policy)

    with _stage("constraints"):
        geometric, functional = _build_constraints(cfg, system, dictionary, rng)
        per_model_cs: dict[str, ConstraintSet] = {}
        for name in cfg.models:
            if name == "edmd":
                per_model_cs[name] = empty_constraints(dictionary.m)
            elif name == "icdmd_constant_only":
                per_model_cs[name] = functional if functional is not None else empty_constraints(dictionary.m)
            else:
                parts = [cs for cs in (geometric, functional) if cs is not None]
                per_model_cs[name] = merge_all(parts) if parts else empty_constraints(dictionary.m)

    with _stage("spectral-setup"):
        equalizer = None
        full_cs = per_model_cs.get("icdmd_full")
        if geometric is not None:
            eq_cs = full_cs if full_cs is not None else geometric
            equalizer = build_equalizer(eq_cs.tags, eq_cs)

    with _stage("evaluation-grid"):
        out_counts = cfg.output_counts if cfg.output_counts is not None else cfg.sample_counts
        out_plan = SamplingPlan(bounds=np.asarray(bounds), counts=out_counts, k=k, substeps=cfg.substeps)
        grid = sample_grid(out_plan)

    with _stage("scoring-setup"):
        classification = classify_regions(
            system, grid, dictionary, k,
            band=cfg.duffing_band if system.name == "duffing" else None,
        )

    box_volume = float(np.prod(np.asarray(bounds)[:, 1] - np.asarray(bounds)[:, 0]))
    records: dict[str, ModelRecord] = {}
    for name in cfg.models:
        cs = per_model_cs[name]
        with _stage(f"fit:{name}"):
            t0 = time.perf_counter()
            if name == "edmd":
                A = solve_edmd(data.X, data.Y)
                model = None
                residual = float(np.linalg.norm(A @ data.X - data.Y))
            else:
                model = solve_icdmd(data.X, data.Y, cs)
                A = model.A
                residual = model.residual
            fit_seconds = time.perf_counter() - t0

        efs = None
        values = grouped = None
        grouped_labels: tuple[str, ...] = ()
        diags = None
        if equalizer is not None:
            with _stage(f"eigenfunctions:{name}"):
                if name == "icdmd_full":
                    efs = induced_eigenfunctions(model, equalizer)
                else:
                    efs = edmd_nearest_span_fit(
                        A, equalizer.D0, lam=equalizer.lam, labels=equalizer.labels
                    )
            with _stage(f"grid-evaluation:{name}"):
                values = evaluate_eigenfunctions(efs, dictionary, grid)
                grouped, grouped_labels = group_by_label(values, equalizer.labels)
            with _stage(f"scoring:{name}"):
                diags = invariance_score(grouped, classification, grouped_labels)
                level_sets = np.mean(np.abs(values - 1.0) <= 0.1, axis=1) * box_volume
                diags = InvarianceDiagnostics(
                    function_labels=diags.function_labels,
                    region_labels=diags.region_labels,
                    normalized_stddev=diags.normalized_stddev,
                    region_mean=diags.region_mean,
                    global_range=diags.global_range,
                    region_counts=diags.region_counts,
                    empty_regions=diags.empty_regions,
                    duality_matrix=efs.W.T @ equalizer.D0,
                    eig_residual=efs.eig_residual,
                    duality_residual=efs.duality_residual,
                    level_set_measures=level_sets,
                )
        records[name] = ModelRecord(
            name=name,
            A=A,
            model=model,
            eigenfunctions=efs,
            grid_values=values,
            grouped_values=grouped,
            grouped_labels=grouped_labels,
            diagnostics=diags,
            residual=residual,
            fit_seconds=fit_seconds,
        )

    return ExperimentResult(
        config=cfg,
        system=system,
        dictionary=dictionary,
        data=data,
        grid=grid,
        classification=classification,
        constraints_geometric=geometric,
        equalizer=equalizer,
        models=records,
    )


# -- result export ------------------------------------------------------------


def _eigenfunction_table(result: ExperimentResult, record: ModelRecord) -> tuple[np.ndarray, list[str]]:
    p = result.grid.shape[0]
    cols = [f"u{i + 1}" for i in range(p)]
    cols += [f"ef{i}_{lab}" for i, lab in enumerate(record.eigenfunctions.labels or
             tuple(f"fn{i}" for i in range(record.grid_values.shape[0])))]
    table = np.vstack([result.grid, record.grid_values]).T
    return table, cols


def export_result(result: ExperimentResult, out_dir) -> Path:
    """Write the result directory: config echo, model JSONs, grids, diagnostics.

    Matrices are written deterministically; re-running the same config and
    seed reproduces model JSONs and CSV grids byte-for-byte (diagnostics.json
    additionally carries wall-clock timings).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    (out / "config.json").write_text(json.dumps(result.config.to_dict(), indent=1) + "\n")

    diagnostics_doc: dict = {
        "system": result.system.name,
        "m": result.dictionary.m,
        "n_samples": result.data.X.shape[1],
        "dropped_samples": result.data.dropped,
        "grid_points": result.grid.shape[1],
        "region_labels": list(result.classification.labels),
        "region_counts": result.classification.counts.tolist(),
        "models": {},
    }
    for name, record in result.models.items():
        model_doc = record.to_doc(result.dictionary)
        (out / f"model_{name}.json").write_text(json.dumps(model_doc, indent=1) + "\n")
        if record.eigenfunctions is not None:
            table, cols = _eigenfunction_table(result, record)
            np.savetxt(
                out / f"eigenfunctions_{name}.csv",
                table,
                delimiter=",",
                header=",".join(cols),
                comments="",
            )
        entry = {
            "residual": record.residual,
            "objective": record.residual**2,
            "fit_seconds": record.fit_seconds,
        }
        if record.model is not None:
            entry["feasibility"] = {
                "geometric": record.model.feasibility_geometric,
                "functional": record.model.feasibility_functional,
            }
        if record.diagnostics is not None:
            entry["invariance"] = record.diagnostics.to_doc()
        diagnostics_doc["models"][name] = entry
    (out / "diagnostics.json").write_text(json.dumps(diagnostics_doc, indent=1) + "\n")
    return out
