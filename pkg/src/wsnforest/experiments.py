"""Seeded batch experiments reproducing the three result figures.

Each experiment returns an :class:`ExperimentReport` whose config snapshot
re-runs to the same series, and can be written out as CSV, SVG, and a
manifest of content hashes, all byte-deterministic for a given seed.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .forest import filter_weak_trees, forest_decision_table, train_forest
from .levels import label_frames
from .pipeline import (
    DetectionRecord,
    PipelineConfig,
    build_training_set,
    first_alarm_time,
    misclassification_rate,
    predict_levels,
    simulate_eval_run,
    success_rate,
    train_pipeline_forest,
)
from .svg import line_chart

TREE_COUNT_SWEEP = (5, 10, 20, 50, 100)
DEFAULT_EVAL_RUNS = 100
ALARM_LEVELS = (2, 3, 4, 5)


@dataclass(frozen=True)
class ExperimentReport:
    experiment_id: str
    config: dict
    seed: int
    series: tuple[tuple[float, Optional[float]], ...]
    metadata: dict

    def __post_init__(self):
        if not self.series:
            raise ValueError("experiment report requires a non-empty series")


def run_monitoring_experiments(
    config: PipelineConfig, eval_runs: int = DEFAULT_EVAL_RUNS
) -> tuple[ExperimentReport, ExperimentReport]:
    """Train once, then evaluate detection delay and per-simulation errors.

    Returns the pair (delay report, error report); the two figures share one
    training and evaluation campaign.
    """
    if eval_runs < 1:
        raise ConfigurationError(f"eval_runs must be >= 1, got {eval_runs}")
    forest = train_pipeline_forest(config)
    table, _ = forest_decision_table(forest)

    records: list[DetectionRecord] = []
    alarm_times: dict[int, list[Optional[int]]] = {lvl: [] for lvl in ALARM_LEVELS}
    per_tree_errors: list[float] = []
    forest_errors: list[float] = []

    for j in range(eval_runs):
        frames = simulate_eval_run(config, j)
        times = [f.time for f in frames]
        predicted = predict_levels(forest, frames, config.thresholds, table=table)
        for lvl in ALARM_LEVELS:
            alarm_times[lvl].append(first_alarm_time(predicted, times, lvl))
        detected = first_alarm_time(predicted, times, config.alarm_level)
        records.append(DetectionRecord(j, frames[-1].failure_time, detected))
        rates = misclassification_rate(forest, label_frames(frames, config.thresholds))
        per_tree_errors.append(rates.per_tree_mean)
        forest_errors.append(rates.forest)

    delays = [r.delay for r in records]
    delay_series = []
    for k in range(1, eval_runs + 1):
        defined = [d for d in delays[:k] if d is not None]
        mean = float(np.mean(defined)) if defined else None
        delay_series.append((float(k), mean))

    failures = [r for r in records if r.actual_failure_time is not None]
    in_time_or_early = sum(
        1 for r in failures if r.delay is not None and r.delay <= 0)
    fraction = in_time_or_early / len(failures) if failures else None

    by_level = {}
    for lvl in ALARM_LEVELS:
        hits = sum(
            1 for r, alarm in zip(records, alarm_times[lvl])
            if r.actual_failure_time is not None and alarm is not None
            and alarm - r.actual_failure_time <= 0)
        by_level[lvl] = hits / len(failures) if failures else None

    common_meta = {
        "retained_trees": len(forest.trees),
        "eval_runs": eval_runs,
    }
    delay_report = ExperimentReport(
        experiment_id="delay",
        config=config.to_dict(),
        seed=config.simulation.seed,
        series=tuple(delay_series),
        metadata={
            **common_meta,
            "n_failures": len(failures),
            "n_detections": sum(1 for r in records if r.detected_time is not None),
            "fraction_in_time_or_early": fraction,
            "fraction_in_time_or_early_by_alarm_level": by_level,
            "alarm_level": config.alarm_level,
            "delays": [r.delay for r in records],
            "detected_times_by_alarm_level": alarm_times,
            "actual_failure_times": [r.actual_failure_time for r in records],
        },
    )

    first20 = float(np.mean(per_tree_errors[: min(20, eval_runs)]))
    last20 = float(np.mean(per_tree_errors[-min(20, eval_runs):]))
    error_report = ExperimentReport(
        experiment_id="error",
        config=config.to_dict(),
        seed=config.simulation.seed,
        series=tuple((float(j + 1), e) for j, e in enumerate(per_tree_errors)),
        metadata={
            **common_meta,
            "forest_errors": forest_errors,
            "points_at_or_above_0.15": [
                j + 1 for j, e in enumerate(per_tree_errors) if e >= 0.15
            ],
            "mean_error_first_20": first20,
            "mean_error_last_20": last20,
            "late_error_at_least_early": last20 >= first20,
            "forest_error_exceeds_per_tree_on": [
                j + 1 for j, (f, p) in enumerate(zip(forest_errors, per_tree_errors))
                if f > p
            ],
        },
    )
    return delay_report, error_report


def run_delay_experiment(
    config: PipelineConfig, eval_runs: int = DEFAULT_EVAL_RUNS
) -> ExperimentReport:
    """Running mean of detection delays over the first k evaluation runs."""
    return run_monitoring_experiments(config, eval_runs)[0]


def run_error_experiment(
    config: PipelineConfig, eval_runs: int = DEFAULT_EVAL_RUNS
) -> ExperimentReport:
    """Per-simulation average tree error over the evaluation campaign."""
    return run_monitoring_experiments(config, eval_runs)[1]


def run_trees_experiment(
    config: PipelineConfig,
    eval_runs: int = DEFAULT_EVAL_RUNS,
    tree_counts: Sequence[int] = TREE_COUNT_SWEEP,
) -> ExperimentReport:
    """Success rate as the number of trees sweeps over ``tree_counts``.

    Per-tree sampling streams depend only on (seed, tree index), so the
    forest is trained once at the largest size and prefix subsets reproduce
    the smaller forests exactly; each subset is weak-filtered independently.
    """
    if eval_runs < 1:
        raise ConfigurationError(f"eval_runs must be >= 1, got {eval_runs}")
    if not tree_counts or any(t < 1 for t in tree_counts):
        raise ConfigurationError(f"invalid tree_counts {tree_counts!r}")
    tree_counts = tuple(sorted(set(int(t) for t in tree_counts)))

    instances = build_training_set(config)
    full = train_forest(
        instances,
        num_trees=max(tree_counts),
        impurity=config.impurity,
        fraction=config.sample_fraction,
        seed=config.simulation.seed,
    )
    eval_frames = []
    for j in range(eval_runs):
        eval_frames.extend(simulate_eval_run(config, j))

    series = []
    retained = {}
    for count in tree_counts:
        subset = filter_weak_trees(replace(full, trees=full.trees[:count]))
        retained[count] = len(subset.trees)
        series.append((float(count), success_rate(subset, eval_frames, config.thresholds)))

    return ExperimentReport(
        experiment_id="trees",
        config=config.to_dict(),
        seed=config.simulation.seed,
        series=tuple(series),
        metadata={
            "eval_runs": eval_runs,
            "eval_frames": len(eval_frames),
            "retained_trees_by_count": retained,
        },
    )


_CSV_SCHEMAS = {
    "delay": ("k", "mean_delay"),
    "error": ("sim_index", "per_tree_error", "forest_error"),
    "trees": ("num_trees", "success_rate"),
}

_CHART_LABELS = {
    "delay": ("Mean detection delay vs. number of simulations",
              "number of simulations", "mean delay (time steps)"),
    "error": ("Diagnostic error rate vs. number of simulations",
              "simulation index", "per-tree error rate"),
    "trees": ("Successful diagnostics vs. number of trees",
              "number of trees", "success rate"),
}


def report_csv(report: ExperimentReport) -> str:
    header = _CSV_SCHEMAS[report.experiment_id]
    lines = [",".join(header)]
    if report.experiment_id == "error":
        forest_errors = report.metadata["forest_errors"]
        for (x, y), fe in zip(report.series, forest_errors):
            lines.append(f"{int(x)},{_num(y)},{_num(fe)}")
    else:
        for x, y in report.series:
            x_text = str(int(x)) if float(x).is_integer() else _num(x)
            lines.append(f"{x_text},{_num(y)}")
    return "\n".join(lines) + "\n"


def _num(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def render_report(report: ExperimentReport) -> str:
    """One SVG chart per report; byte-identical for identical reports."""
    title, x_label, y_label = _CHART_LABELS[report.experiment_id]
    return line_chart(
        report.series,
        title=title,
        x_label=x_label,
        y_label=y_label,
        y_zero_line=report.experiment_id == "delay",
    )


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_report_files(report: ExperimentReport, out_dir: str) -> dict:
    """Write <id>.csv, <id>.svg, and manifest.json; returns the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    base = report.experiment_id
    csv_path = os.path.join(out_dir, f"{base}.csv")
    svg_path = os.path.join(out_dir, f"{base}.svg")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report_csv(report))
    with open(svg_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_report(report))
    manifest = {
        "experiment": report.experiment_id,
        "config": report.config,
        "seed": report.seed,
        "files": [
            {"path": f"{base}.csv", "sha256": _sha256(csv_path)},
            {"path": f"{base}.svg", "sha256": _sha256(svg_path)},
        ],
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
