"""Command-line front end.

Four subcommands:

* ``demo NAME`` — run a built-in experiment preset and export its results.
* ``fit`` — fit a constrained model on user-supplied X/Y matrix CSVs.
* ``eigenfunctions`` — extract induced eigenfunctions from a fitted model
  JSON and (when the model knows its dictionary) evaluate them on a grid.
* ``validate-constraints`` — check a constraint-set JSON and print a report.

Exit codes: 0 success, 1 computation or validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    ConfigError,
    DimensionError,
    IcdmdError,
    UnsupportedError,
)

_USAGE_ERRORS = (DimensionError, UnsupportedError, ConfigError)


@dataclass(frozen=True)
class CliConfig:
    """Global flags shared by every subcommand."""

    rank_rtol: float | None
    output_dir: Path | None
    seed: int | None
    format: str


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icdmd",
        description="Fit invariant-consistent Koopman surrogate models and "
        "extract their eigenfunctions at eigenvalue 1.",
    )
    parser.add_argument("--tol", type=float, default=None, metavar="RTOL",
                        help="relative rank tolerance for pseudo-inverses (default: machine)")
    parser.add_argument("--output-dir", type=Path, default=None,
                        help="directory for result files")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed overriding the experiment config")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="output format where a choice exists (default csv)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_demo = sub.add_parser("demo", help="run a built-in experiment preset")
    p_demo.add_argument("name", help="built-in system name")
    p_demo.add_argument("--scale", choices=("desk", "paper"), default="desk",
                        help="desk: seconds-scale defaults; paper: published sizes")

    p_fit = sub.add_parser("fit", help="fit a model on X/Y CSV matrices")
    p_fit.add_argument("--x", required=True, type=Path, help="CSV of dictionary images of samples")
    p_fit.add_argument("--y", required=True, type=Path, help="CSV of dictionary images of one-step successors")
    p_fit.add_argument("--constraints", required=True, type=Path,
                       help="constraint-set JSON ({} fits the unconstrained baseline)")
    p_fit.add_argument("--output", required=True, type=Path, help="model JSON to write")
    p_fit.add_argument("--dictionary", type=Path, default=None,
                       help="dictionary descriptor JSON to embed for later grid evaluation")
    p_fit.add_argument("--strictness", choices=("generalized", "strict"), default="generalized")

    p_ef = sub.add_parser("eigenfunctions", help="extract eigenfunctions from a fitted model")
    p_ef.add_argument("--model", required=True, type=Path, help="model JSON from fit/demo")
    p_ef.add_argument("--output", required=True, type=Path, help="CSV (or JSON) to write")
    p_ef.add_argument("--grid", default=None, metavar="COUNTS",
                      help="comma-separated grid counts, e.g. 81,81; needs an embedded dictionary")
    p_ef.add_argument("--method", choices=("sequential", "simultaneous"), default="sequential")

    p_val = sub.add_parser("validate-constraints", help="check a constraint-set JSON")
    p_val.add_argument("path", type=Path, help="constraint-set JSON")
    p_val.add_argument("--strictness", choices=("generalized", "strict"), default="generalized")
    p_val.add_argument("--check-tol", type=float, default=1e-8,
                       help="residual tolerance for the compatibility checks (default 1e-8)")
    return parser


def _require_files(*paths: Path) -> None:
    for p in paths:
        if not p.is_file():
            raise ConfigError(f"no such file: {p}")


def _rank_tol(cfg: CliConfig):
    from .linalg import DEFAULT_TOL, RankTolerance

    return DEFAULT_TOL if cfg.rank_rtol is None else RankTolerance(rtol=cfg.rank_rtol)


def cmd_demo(args, cfg: CliConfig) -> int:
    from dataclasses import replace

    from .dynamics import builtin_names
    from .pipeline import export_result, preset_config, run_experiment

    if args.name not in builtin_names():
        print(
            f"error: unknown demo {args.name!r}; available: {', '.join(builtin_names())}",
            file=sys.stderr,
        )
        return 2
    config = preset_config(args.name, args.scale)
    if cfg.seed is not None:
        config = replace(config, seed=cfg.seed)
    out_dir = cfg.output_dir or Path("icdmd_results") / config.label
    try:
        result = run_experiment(config)
        export_result(result, out_dir)
    except IcdmdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _print_demo_summary(result, out_dir)
    return 0


def _print_demo_summary(result, out_dir: Path) -> None:
    print(f"system {result.system.name}: m={result.dictionary.m}, "
          f"n={result.data.X.shape[1]} samples ({result.data.dropped} escaped), "
          f"grid={result.grid.shape[1]} points")
    if result.equalizer is not None:
        print(f"equalizer: s={result.equalizer.s} invariants, "
              f"residual={result.equalizer.residual:.2e}")
    header = f"{'model':<22}{'residual':>12}{'eig_res':>12}{'dual_res':>12}{'score(mean)':>13}{'score(max)':>13}"
    print(header)
    for name, rec in result.models.items():
        d = rec.diagnostics
        eig = f"{rec.eigenfunctions.eig_residual:.2e}" if rec.eigenfunctions else "-"
        dual = f"{rec.eigenfunctions.duality_residual:.2e}" if rec.eigenfunctions else "-"
        mean_s = f"{d.mean_score():.4f}" if d is not None else "-"
        max_s = f"{d.worst_score():.4f}" if d is not None else "-"
        print(f"{name:<22}{rec.residual:>12.4e}{eig:>12}{dual:>12}{mean_s:>13}{max_s:>13}")
    for name, rec in result.models.items():
        if rec.diagnostics is not None and rec.diagnostics.empty_regions:
            print(f"note: {name}: regions with no scored points: "
                  f"{', '.join(rec.diagnostics.empty_regions)}")
    print(f"results written to {out_dir}")


def cmd_fit(args, cfg: CliConfig) -> int:
    import json

    from .constraints import ConstraintSet, empty_constraints
    from .errors import ConstraintError
    from .io import load_json, load_matrix_csv, save_json
    from .solver import solve_icdmd

    _require_files(args.x, args.y, args.constraints)
    if args.dictionary is not None:
        _require_files(args.dictionary)
    X = load_matrix_csv(args.x)
    Y = load_matrix_csv(args.y)
    if X.shape != Y.shape:
        raise DimensionError(f"X {X.shape} and Y {Y.shape} must match")
    doc = load_json(args.constraints)
    if doc:
        cs = ConstraintSet.from_doc(doc)
        if cs.m != X.shape[0]:
            raise DimensionError(f"constraints are for m={cs.m} but X has {X.shape[0]} observables")
    else:
        cs = empty_constraints(X.shape[0])
    dictionary = None
    if args.dictionary is not None:
        from .dictionary import Dictionary

        dictionary = Dictionary.from_descriptor(load_json(args.dictionary))
        if dictionary.m != X.shape[0]:
            raise DimensionError(
                f"dictionary has m={dictionary.m} observables but X has {X.shape[0]}"
            )
    try:
        model = solve_icdmd(X, Y, cs, tol=_rank_tol(cfg), strictness=args.strictness)
    except ConstraintError as exc:
        report = getattr(exc, "report", None)
        print(report.render() if report is not None else f"error: {exc}", file=sys.stderr)
        return 1
    save_json(args.output, model.to_doc(dictionary))
    print(f"fitted m={model.m} model: residual={model.residual:.6e}, "
          f"objective={model.residual**2:.6e}")
    print(f"feasibility: geometric={model.feasibility_geometric:.2e}, "
          f"functional={model.feasibility_functional:.2e}")
    print(f"model written to {args.output}")
    return 0


def cmd_eigenfunctions(args, cfg: CliConfig) -> int:
    import numpy as np

    from .io import load_json, save_json, save_matrix_csv
    from .solver import ICDMDModel
    from .spectral import build_equalizer, evaluate_eigenfunctions, induced_eigenfunctions

    _require_files(args.model)
    doc = load_json(args.model)
    model = ICDMDModel.from_doc(doc, tol=_rank_tol(cfg))
    if not model.constraints.tags:
        print("error: no geometric invariants encoded in this model's constraints; "
              "eigenfunction extraction needs at least one fixed point or cycle",
              file=sys.stderr)
        return 1
    eq = build_equalizer(model.constraints.tags, model.constraints)
    ef = induced_eigenfunctions(model, eq, tol=_rank_tol(cfg), method=args.method)
    print(f"extracted s={ef.s} eigenfunctions at lambda={ef.lam:g} "
          f"({ef.method}): eig_residual={ef.eig_residual:.6e}, "
          f"duality_residual={ef.duality_residual:.6e}")

    grid = values = None
    if args.grid is not None:
        from .dictionary import Dictionary
        from .dynamics import SamplingPlan, sample_grid

        if "dictionary" not in doc:
            raise ConfigError("--grid needs a model JSON with an embedded dictionary "
                              "(fit with --dictionary)")
        dictionary = Dictionary.from_descriptor(doc["dictionary"])
        try:
            counts = tuple(int(c) for c in str(args.grid).split(","))
        except ValueError:
            raise ConfigError(f"--grid must be comma-separated counts, got {args.grid!r}") from None
        if len(counts) != dictionary.dim:
            raise ConfigError(f"--grid has {len(counts)} counts for a {dictionary.dim}-D dictionary")
        plan = SamplingPlan(bounds=dictionary.bounds, counts=counts, k=1.0)
        grid = sample_grid(plan)
        values = evaluate_eigenfunctions(ef, dictionary, grid)

    if cfg.format == "json":
        out_doc = ef.to_doc()
        if values is not None:
            out_doc["grid"] = grid.T.tolist()
            out_doc["values"] = values.tolist()
        save_json(args.output, out_doc)
    elif values is not None:
        labels = ef.labels or tuple(f"fn{i}" for i in range(ef.s))
        cols = [f"u{i + 1}" for i in range(grid.shape[0])]
        cols += [f"ef{i}_{lab}" for i, lab in enumerate(labels)]
        np.savetxt(args.output, np.vstack([grid, values]).T, delimiter=",",
                   header=",".join(cols), comments="")
    else:
        # no grid requested/possible: export the coefficient vectors themselves
        save_matrix_csv(args.output, ef.W)
    print(f"eigenfunctions written to {args.output}")
    return 0


def cmd_validate_constraints(args, cfg: CliConfig) -> int:
    from .constraints import ConstraintSet, validate
    from .io import load_json

    _require_files(args.path)
    cs = ConstraintSet.from_doc(load_json(args.path))
    report = validate(cs, tol=args.check_tol, strictness=args.strictness,
                      rank_tol=_rank_tol(cfg))
    print(report.render())
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    cfg = CliConfig(
        rank_rtol=args.tol,
        output_dir=args.output_dir,
        seed=args.seed,
        format=args.format,
    )
    handlers = {
        "demo": cmd_demo,
        "fit": cmd_fit,
        "eigenfunctions": cmd_eigenfunctions,
        "validate-constraints": cmd_validate_constraints,
    }
    try:
        return handlers[args.command](args, cfg)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IcdmdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
