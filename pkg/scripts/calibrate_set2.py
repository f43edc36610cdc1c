"""Search for the set-2 recalibration config used by the trees experiment.

The correlated regime saturates the default thresholds (healthy pressure
and humidity sit far above every default bin), so the repo ships a
recalibrated config.  This script sweeps candidate threshold
grids (expressed in reference-temperature units and transported through the
correlation maps), sensor-dropout rates, and training/sampling volumes,
measuring the success-rate curve over the tree-count sweep for several
seeds.

Findings that shaped the shipped config (see README):
* thresholds alone leave the curve exactly flat in the number of trees:
  with 1000 training instances every reachable feature cell is seen by
  every tree, so all forest sizes vote identically;
* the plateau height is set by the sensor-dropout rate (diagnosis is scored
  against uncorrupted ground truth, so dropout is the error source);
* a tree-count slope only appears when individual trees are starved
  (training_runs=1, sample_fraction=0.05 gives 5-instance trees), which is
  what makes ensemble averaging measurable.

Usage: python scripts/calibrate_set2.py [--quick] [--stage {grids,volume}]
"""

import argparse
import itertools
import json

import numpy as np

from wsnforest.experiments import run_trees_experiment
from wsnforest.levels import ThresholdTable
from wsnforest.pipeline import PipelineConfig
from wsnforest.simulation import SimulationConfig

TEMP_GRID = (22.9, 24.5, 26.0, 28.0)

X_GRIDS = {
    "transported": (22.9, 24.5, 26.0, 28.0),
    "down1": (21.9, 23.5, 25.0, 27.0),
    "down2": (20.7, 22.3, 23.8, 25.8),
    "tight": (24.2, 24.9, 25.6, 26.3),
    "wide": (21.0, 23.5, 26.0, 28.5),
}

BREAKDOWNS = (0.005, 0.01, 0.02, 0.03)

# Stage-2 sweep around the winning grid: per-tree sample volume and dropout.
VOLUMES = [
    (10, 0.67), (1, 0.67), (1, 0.2), (1, 0.1), (1, 0.08),
    (1, 0.06), (1, 0.05),
]
FINE_BREAKDOWNS = (0.02, 0.022, 0.025, 0.03)


def pressure_grid(x_grid):
    return tuple(x / 2 + 10 for x in x_grid)


def humidity_grid(x_grid):
    return tuple(x * 525 + 12 for x in x_grid)


def evaluate(thresholds, breakdown, seeds, eval_runs,
             training_runs=10, sample_fraction=0.67):
    curves = []
    for seed in seeds:
        config = PipelineConfig(
            simulation=SimulationConfig(
                experiment_set=2, seed=seed,
                sensor_breakdown_prob=breakdown),
            thresholds=thresholds,
            training_runs=training_runs,
            sample_fraction=sample_fraction,
        )
        report = run_trees_experiment(config, eval_runs=eval_runs)
        curves.append([y for _, y in report.series])
    return np.median(np.array(curves), axis=0)


def score(curve):
    return abs(curve[0] - 0.60) + abs(curve[-1] - 0.80)


def stage_grids(seeds, eval_runs):
    results = []
    for h_name, breakdown in itertools.product(X_GRIDS, BREAKDOWNS):
        thresholds = ThresholdTable(
            temperature=TEMP_GRID,
            pressure=pressure_grid(X_GRIDS["transported"]),
            humidity=humidity_grid(X_GRIDS[h_name]),
        )
        curve = evaluate(thresholds, breakdown, seeds, eval_runs)
        results.append((score(curve), h_name, breakdown, curve))
        print(f"h={h_name:12s} breakdown={breakdown:<6g} "
              f"curve={[round(v, 3) for v in curve]} score={score(curve):.3f}",
              flush=True)
    results.sort(key=lambda r: r[0])
    print("\nbest:", results[0][1:3], [round(v, 3) for v in results[0][3]])


def stage_volume(seeds, eval_runs):
    thresholds = ThresholdTable(
        temperature=TEMP_GRID,
        pressure=pressure_grid(X_GRIDS["transported"]),
        humidity=humidity_grid(X_GRIDS["transported"]),
    )
    best = None
    for (training_runs, fraction), breakdown in itertools.product(
            VOLUMES, FINE_BREAKDOWNS):
        curve = evaluate(thresholds, breakdown, seeds, eval_runs,
                         training_runs=training_runs, sample_fraction=fraction)
        monotone = (np.diff(curve) >= -0.05).all()
        print(f"training_runs={training_runs} fraction={fraction:<5g} "
              f"breakdown={breakdown:<6g} curve={[round(v, 3) for v in curve]} "
              f"score={score(curve):.3f} mono={monotone}", flush=True)
        candidate = (score(curve), training_runs, fraction, breakdown, curve)
        if monotone and (best is None or candidate[0] < best[0]):
            best = candidate
    if best:
        print("\nbest:", best[1:4], [round(v, 3) for v in best[4]])
        print("thresholds:", json.dumps(thresholds.to_dict()))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="3 seeds x 40 eval runs instead of 10 x 100")
    parser.add_argument("--stage", choices=("grids", "volume"), default="volume")
    args = parser.parse_args()

    seeds = range(3) if args.quick else range(10)
    eval_runs = 40 if args.quick else 100
    if args.stage == "grids":
        stage_grids(seeds, eval_runs)
    else:
        stage_volume(seeds, eval_runs)


if __name__ == "__main__":
    main()
