"""Basin membership in a 2-D double-well flow from one constrained fit.

The unforced, damped Duffing oscillator has two spiral sinks and a saddle at
the origin; the saddle's stable manifold is the curved boundary between the
two basins of attraction. We fit a 21x21-cell indicator surrogate with all
three fixed points pinned, extract the three induced eigenfunctions, and
compare their level sets against basins computed the expensive way (long
trajectory simulation per grid point).

Near the basin boundary no cell-sized surrogate can be sharp: the boundary
is a curve, cells are boxes, and a box the curve crosses holds samples from
both basins. Points whose cell touches a differently-labeled cell are
therefore left out of the score, which is the honest statement of what a
histogram surrogate can resolve.
"""

from __future__ import annotations

import numpy as np

from icdmd.pipeline import preset_config, run_experiment


def main():
    cfg = preset_config("duffing", "desk")
    print(f"system: {cfg.system}, dictionary: {cfg.dictionary['cells']} cells, "
          f"grid: {cfg.sample_counts}, step k={cfg.k or 1.6}")
    result = run_experiment(cfg)
    record = result.models["icdmd_full"]
    ef = record.eigenfunctions

    print("\nfixed points pinned: sink (-1/6, 0), saddle (0, 0), sink (1/6, 0)")
    print(f"induced eigenfunctions: s={ef.s}, duality residual "
          f"{ef.duality_residual:.2e}")

    diags = record.diagnostics
    print(f"\nbasins scored on |u1| <= {cfg.duffing_band} (beyond the band, "
          "trajectories leave the sampled box before settling)")
    print(f"scored points per basin: {diags.region_counts.tolist()} "
          f"({list(diags.region_labels)})")
    print("normalized within-basin stddev per function:")
    for i, lab in enumerate(diags.function_labels):
        cells = "  ".join(f"{v:.4f}" for v in diags.normalized_stddev[i])
        print(f"  {lab:<16} {cells}")
    print(f"worst: {diags.worst_score():.4f}")

    print("\nbasin means of the two sink functions (rows) on the two basins "
          "(cols):")
    for i, lab in enumerate(diags.function_labels):
        if i == 1:  # the middle fixed point is the saddle, not a sink
            continue
        cells = "  ".join(f"{v:.3f}" for v in diags.region_mean[i])
        print(f"  {lab:<16} {cells}")
    print("each sink's function averages near 1 on its own basin and near 0 on")
    print("the other: thresholding at 1/2 reads off basin membership without")
    print("simulating a single long trajectory.")


if __name__ == "__main__":
    main()
