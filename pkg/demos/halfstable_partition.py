"""A half-stable equilibrium resolved exactly by an indicator dictionary.

The flow u' = -(u+0.5)(u-0.2)^2(u-0.7) has a half-stable point at 0.2:
attracting from above, repelling below. With an indicator (histogram)
dictionary the fitted operator is a transition matrix between cells, the
constrained fit pins the cells containing the three equilibria, and the
induced eigenfunctions come out *exactly* piecewise constant on the four
invariant intervals -- the within-region standard deviation is zero to
machine precision, because every sample's image cell lies on the same side
of each pinned cell as the sample itself (1-D flows cannot cross an
equilibrium).
"""

from __future__ import annotations

import numpy as np

from icdmd.pipeline import preset_config, run_experiment


def main():
    cfg = preset_config("cubic_halfstable", "desk")
    print(f"system: {cfg.system}, dictionary: {cfg.dictionary}, "
          f"samples: {cfg.sample_counts[0]}")
    result = run_experiment(cfg)
    record = result.models["icdmd_full"]
    ef = record.eigenfunctions

    print(f"\nfitted transition matrix: {record.A.shape[0]} cells, "
          f"residual {record.residual:.4e}")
    print(f"induced eigenfunctions: s={ef.s}, eig residual {ef.eig_residual:.2e}, "
          f"duality residual {ef.duality_residual:.2e}")

    diags = record.diagnostics
    print(f"\nregions: {list(diags.region_labels)}")
    print(f"scored points: {diags.region_counts.tolist()}")
    print("normalized within-region stddev per function:")
    for i, lab in enumerate(diags.function_labels):
        cells = "  ".join(f"{v:.2e}" for v in diags.normalized_stddev[i])
        print(f"  {lab:<16} {cells}")
    print(f"\nworst overall: {diags.worst_score():.2e} -- exactly flat, "
          "not approximately flat")

    print("\nregion means of each function (exactly 0 or 1 on every region):")
    for i, lab in enumerate(diags.function_labels):
        cells = "  ".join(f"{v:.3f}" for v in diags.region_mean[i])
        print(f"  {lab:<16} {cells}")
    print("\nthe -0.5 function marks the interval that genuinely drains into its")
    print("cell. Near the double root at 0.2 the flow is slower than one cell")
    print("per step, so those cells are fixed cells of the chain in their own")
    print("right; the minimum-norm eigenfunctions put no weight there, and the")
    print("0.2 / 0.7 functions stay zero on the open intervals while still")
    print("hitting 1 on their own pinned cells (criterion checked elsewhere).")


if __name__ == "__main__":
    main()
