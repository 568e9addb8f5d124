"""End-to-end experiment pipeline: configs, region scoring, runs, export.

Covers config parsing (dict/JSON/TOML, unknown-key rejection), the built-in
presets, region classification margins for each partition kind, the
invariance score on functions where the right answer is exactly zero, and
byte-level reproducibility of exported results for a fixed seed.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from icdmd.dictionary import indicator_dictionary
from icdmd.dynamics import OdeSystem, builtin
from icdmd.errors import ConfigError
from icdmd.pipeline import (
    MODEL_NAMES,
    ExperimentConfig,
    RegionClassification,
    classify_regions,
    export_result,
    group_by_label,
    invariance_score,
    preset_config,
    run_experiment,
)


def _indicator31_config(**overrides):
    base = dict(
        system="cubic_multistable",
        dictionary={"kind": "indicator", "cells": [31]},
        sample_counts=(1201,),
        models=("icdmd_full",),
        label="indicator31",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# -- configuration ---------------------------------------------------------------

def test_config_from_dict_minimal_defaults():
    cfg = ExperimentConfig.from_dict(
        {"system": "duffing", "dictionary": {"kind": "indicator", "cells": [21, 21]},
         "sample_counts": [81, 81]}
    )
    assert cfg.models == ("icdmd_full",)
    assert cfg.constraint_recipe == ("fixed_points", "constant_function")
    assert cfg.escape_policy == "drop"
    assert cfg.seed == 0


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(
            {"system": "duffing", "dictionary": {}, "sample_counts": [4],
             "typo_key": 1}
        )


def test_config_requires_core_keys():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"system": "duffing"})


def test_config_rejects_unknown_model_and_recipe():
    with pytest.raises(ConfigError):
        _indicator31_config(models=("bogus",))
    with pytest.raises(ConfigError):
        _indicator31_config(constraint_recipe=("fixed_points", "bogus"))
    with pytest.raises(ConfigError):
        _indicator31_config(escape_policy="ignore")
    with pytest.raises(ConfigError):
        _indicator31_config(models=())


def test_config_dict_round_trip():
    cfg = _indicator31_config(k=0.25, bounds=((-1.0, 1.0),), seed=7)
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_config_load_json_and_toml(tmp_path):
    doc = {"system": "cubic_halfstable",
           "dictionary": {"kind": "indicator", "cells": [16]},
           "sample_counts": [301]}
    jpath = tmp_path / "exp.json"
    jpath.write_text(json.dumps(doc))
    assert ExperimentConfig.load(jpath).system == "cubic_halfstable"

    tpath = tmp_path / "exp.toml"
    tpath.write_text(
        'system = "cubic_halfstable"\n'
        "sample_counts = [301]\n"
        "[dictionary]\n"
        'kind = "indicator"\n'
        "cells = [16]\n"
    )
    assert ExperimentConfig.load(tpath) == ExperimentConfig.load(jpath)


def test_config_load_rejects_bad_text(tmp_path):
    bad = tmp_path / "exp.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(bad)
    badt = tmp_path / "exp.toml"
    badt.write_text("system = = =")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(badt)


def test_preset_labels_and_guards():
    for name in ("cubic_multistable", "cubic_halfstable", "duffing", "polar_limit_cycles"):
        for scale in ("desk", "paper"):
            cfg = preset_config(name, scale)
            assert cfg.label == f"{name}_{scale}"
            assert cfg.system == name
    assert preset_config("cubic_multistable").models == MODEL_NAMES
    assert "limit_cycles" in preset_config("polar_limit_cycles").constraint_recipe
    with pytest.raises(ConfigError):
        preset_config("lorenz")
    with pytest.raises(ConfigError):
        preset_config("duffing", "wall")


# -- region classification ---------------------------------------------------------

def test_classify_intervals_with_margins():
    sys = builtin("cubic_multistable")
    d = indicator_dictionary(1, 31, (-1.0, 1.0))
    pts = np.array([[-0.99, -0.52, 0.0, 0.45, 0.99]])
    cls = classify_regions(sys, pts, d, k=0.1)
    # -0.52 sits within one cell width of the invariant boundary at -0.5
    assert cls.membership.tolist() == [0, -1, 1, 2, 3]
    assert cls.labels == tuple(r["label"] for r in sys.invariant_partition)


def test_classify_annuli_with_margins():
    sys = builtin("polar_limit_cycles")
    d = indicator_dictionary(2, (21, 21), (-1.0, 1.0))
    radii = [0.15, 0.35, 0.5, 0.7, 0.9]
    pts = np.vstack([radii, np.zeros(5)])
    cls = classify_regions(sys, pts, d, k=1 / 6)
    # 0.35 and 0.7 are within one cell width of the invariant circles
    assert cls.membership.tolist() == [0, -1, 1, -1, 2]


def test_classify_mixed_kinds_rejected():
    sys = OdeSystem(
        name="franken", dim=1, vector_field=lambda u: -u,
        known_fixed_points=np.zeros((1, 1)),
        invariant_partition=(
            {"kind": "interval", "lo": -1.0, "hi": 0.0, "label": "a",
             "invariant_lo": False, "invariant_hi": True},
            {"kind": "basin", "attractor": (0.0,), "label": "b"},
        ),
    )
    d = indicator_dictionary(1, 8, (-1.0, 1.0))
    with pytest.raises(ConfigError):
        classify_regions(sys, np.zeros((1, 3)), d, k=0.1)


def test_classify_no_partition_is_all_excluded():
    sys = OdeSystem(name="bare", dim=1, vector_field=lambda u: -u,
                    known_fixed_points=np.zeros((1, 1)))
    d = indicator_dictionary(1, 8, (-1.0, 1.0))
    cls = classify_regions(sys, np.linspace(-1, 1, 5).reshape(1, -1), d, k=0.1)
    assert cls.labels == ()
    assert (cls.membership == -1).all()


# -- invariance scoring --------------------------------------------------------------

def _two_region_classification(n=10):
    membership = np.array([0] * (n // 2) + [1] * (n - n // 2))
    return RegionClassification(membership=membership, labels=("left", "right"))


def test_score_constant_function_is_zero():
    cls = _two_region_classification()
    diags = invariance_score(np.full((1, 10), 3.7), cls)
    assert diags.worst_score() == 0.0
    assert diags.mean_score() == 0.0


def test_score_region_aligned_step_is_zero():
    cls = _two_region_classification()
    values = np.where(cls.membership == 0, 1.0, 0.0).reshape(1, -1)
    diags = invariance_score(values, cls)
    assert diags.worst_score() == 0.0
    assert np.allclose(diags.region_mean, [[1.0, 0.0]])
    assert diags.global_range.tolist() == [1.0]


def test_score_misaligned_step_is_positive():
    cls = _two_region_classification()
    values = np.r_[np.ones(3), np.zeros(7)].reshape(1, -1)
    diags = invariance_score(values, cls)
    assert diags.worst_score() > 0.1


def test_score_empty_region_flagged_not_fatal():
    cls = RegionClassification(membership=np.zeros(6, dtype=int),
                               labels=("only", "never"))
    diags = invariance_score(np.arange(6.0).reshape(1, -1), cls)
    assert diags.empty_regions == ("never",)
    assert np.isnan(diags.normalized_stddev[0, 1])
    assert np.isfinite(diags.normalized_stddev[0, 0])
    doc = diags.to_doc()
    assert doc["empty_regions"] == ["never"]


def test_score_grid_size_mismatch():
    cls = _two_region_classification()
    with pytest.raises(ConfigError):
        invariance_score(np.ones((1, 9)), cls)


def test_group_by_label_sums_first_seen_order():
    values = np.array([[1.0, 2.0], [10.0, 20.0], [100.0, 200.0]])
    grouped, order = group_by_label(values, ["a", "b", "a"])
    assert order == ("a", "b")
    assert grouped.tolist() == [[101.0, 202.0], [10.0, 20.0]]


# -- experiment runs -------------------------------------------------------------------

def test_indicator_run_recovers_three_invariants():
    result = run_experiment(_indicator31_config())
    record = result.models["icdmd_full"]
    ef = record.eigenfunctions
    assert ef.s == 3
    assert ef.method == "induced_sequential"
    assert ef.duality_residual <= 1e-8
    assert ef.eig_residual <= 1e-8 * max(1.0, float(np.linalg.norm(record.A)))
    assert result.equalizer is not None and result.equalizer.s == 3
    # grouped values coincide with raw values (one function per invariant)
    assert record.grouped_values.shape == record.grid_values.shape


def test_multistable_desk_fits_all_three_models(desk_results):
    result, _ = desk_results["cubic_multistable"]
    assert set(result.models) == set(MODEL_NAMES)
    for name, record in result.models.items():
        assert record.eigenfunctions is not None
        assert record.grouped_values.shape[0] == 3
        assert np.isfinite(record.residual)
    assert result.models["icdmd_full"].eigenfunctions.method == "induced_sequential"
    assert result.models["edmd"].eigenfunctions.method == "nearest_span"
    assert result.models["edmd"].model is None
    assert result.models["icdmd_constant_only"].model is not None


def test_duffing_desk_recovers_three_fixed_point_functions(desk_results):
    result, _ = desk_results["duffing"]
    ef = result.models["icdmd_full"].eigenfunctions
    assert ef.s == 3
    assert all(lab.startswith("fixed_point_") for lab in ef.labels)
    assert result.classification.counts.tolist() == [288, 288]


def test_polar_desk_recovers_nine_invariants(desk_results):
    result, _ = desk_results["polar_limit_cycles"]
    ef = result.models["icdmd_full"].eigenfunctions
    assert ef.s == 9  # one fixed point + four orbits on each of two cycles
    assert sum(lab.startswith("fixed_point") for lab in ef.labels) == 1
    assert sum("cycle" in lab for lab in ef.labels) == 8
    # the four orbits of a cycle share its label, so three distinct invariants
    assert len(set(ef.labels)) == 3
    # orbit functions from the same cycle collapse onto one grouped row
    assert result.models["icdmd_full"].grouped_values.shape[0] == 3


def test_desk_region_counts_are_stable(desk_results):
    counts = {name: desk_results[name][0].classification.counts.tolist()
              for name in desk_results}
    assert counts["cubic_multistable"] == [220, 261, 140, 100]
    assert counts["cubic_halfstable"] == [262, 343, 223, 141]
    assert counts["duffing"] == [288, 288]
    assert counts["polar_limit_cycles"] == [248, 736, 3580]


# -- export and reproducibility ------------------------------------------------------

def test_export_layout(tmp_path, desk_results):
    result, _ = desk_results["cubic_multistable"]
    out = export_result(result, tmp_path / "run")
    assert (out / "config.json").is_file()
    assert (out / "diagnostics.json").is_file()
    for name in MODEL_NAMES:
        assert (out / f"model_{name}.json").is_file()
        assert (out / f"eigenfunctions_{name}.csv").is_file()
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["system"] == "cubic_multistable"
    assert set(diag["models"]) == set(MODEL_NAMES)
    header = (out / "eigenfunctions_icdmd_full.csv").read_text().splitlines()[0]
    cols = header.split(",")
    assert cols[0] == "u1" and len(cols) == 4  # one coordinate, three functions


def test_rerun_reproduces_exports_byte_for_byte(tmp_path):
    cfg = _indicator31_config(seed=13)
    out_a = export_result(run_experiment(cfg), tmp_path / "a")
    out_b = export_result(run_experiment(cfg), tmp_path / "b")
    for name in ("config.json", "model_icdmd_full.json", "eigenfunctions_icdmd_full.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
    # diagnostics carry wall-clock timings, so compare everything but those
    da = json.loads((out_a / "diagnostics.json").read_text())
    db = json.loads((out_b / "diagnostics.json").read_text())
    for d in (da, db):
        for entry in d["models"].values():
            entry.pop("fit_seconds")
    assert da == db
