"""End-to-end orchestration: simulate, label, train, filter, diagnose.

Also computes the evaluation metrics: detection delay against the device's
ground-truth failure time, per-tree and post-vote misclassification rates,
and the fraction of frames diagnosed at their true global level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .forest import (
    Forest,
    IMPURITY_FUNCTIONS,
    all_feature_vectors,
    feature_index,
    filter_weak_trees,
    forest_decision_table,
    tree_diagnose,
    train_forest,
)
from .levels import (
    LabeledInstance,
    ThresholdTable,
    frame_features,
    label_frames,
    true_global_level,
)
from .simulation import ObservationFrame, SimulationConfig, simulate_run

_ALL_CELLS = all_feature_vectors()


@dataclass(frozen=True)
class PipelineConfig:
    simulation: SimulationConfig
    thresholds: ThresholdTable = field(default_factory=ThresholdTable.default)
    num_trees: int = 100
    impurity: str = "entropy"
    sample_fraction: float = 0.67
    alarm_level: int = 4
    training_runs: int = 10

    def __post_init__(self):
        if not isinstance(self.num_trees, int) or self.num_trees < 1:
            raise ConfigurationError(f"num_trees must be >= 1, got {self.num_trees!r}")
        if self.impurity not in IMPURITY_FUNCTIONS:
            raise ConfigurationError(
                f"impurity must be one of {sorted(IMPURITY_FUNCTIONS)}, "
                f"got {self.impurity!r}")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ConfigurationError(
                f"sample_fraction must be in (0, 1], got {self.sample_fraction!r}")
        if self.alarm_level not in (2, 3, 4, 5):
            raise ConfigurationError(
                f"alarm_level must be in 2..5, got {self.alarm_level!r}")
        if not isinstance(self.training_runs, int) or self.training_runs < 1:
            raise ConfigurationError(
                f"training_runs must be >= 1, got {self.training_runs!r}")

    def to_dict(self) -> dict:
        return {
            "simulation": self.simulation.to_dict(),
            "thresholds": self.thresholds.to_dict(),
            "num_trees": self.num_trees,
            "impurity": self.impurity,
            "sample_fraction": self.sample_fraction,
            "alarm_level": self.alarm_level,
            "training_runs": self.training_runs,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {
            "simulation", "thresholds", "num_trees", "impurity",
            "sample_fraction", "alarm_level", "training_runs",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if "simulation" not in data:
            raise ConfigurationError("config must provide a 'simulation' section")
        kwargs = dict(data)
        kwargs["simulation"] = SimulationConfig.from_dict(data["simulation"])
        if "thresholds" in data:
            kwargs["thresholds"] = ThresholdTable.from_dict(data["thresholds"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc


@dataclass(frozen=True)
class DetectionRecord:
    """Detection outcome for one evaluation run.

    ``delay = detected_time - actual_failure_time`` when both exist;
    negative means early, zero in time, positive late.
    """

    run_id: int
    actual_failure_time: Optional[int]
    detected_time: Optional[int]

    @property
    def delay(self) -> Optional[int]:
        if self.actual_failure_time is None or self.detected_time is None:
            return None
        return self.detected_time - self.actual_failure_time

    @property
    def is_empty(self) -> bool:
        return self.actual_failure_time is None and self.detected_time is None


def build_training_set(config: PipelineConfig) -> list[LabeledInstance]:
    """Simulate ``training_runs`` independent runs and label every frame."""
    instances: list[LabeledInstance] = []
    for run_index in range(config.training_runs):
        frames = simulate_run(config.simulation, run_index)
        instances.extend(label_frames(frames, config.thresholds))
    return instances


def simulate_eval_run(config: PipelineConfig, eval_index: int) -> list[ObservationFrame]:
    """Simulate evaluation run ``eval_index`` on a stream disjoint from training.

    Evaluation runs reuse the run-index stream family, offset past the
    training indices, so one seed drives the whole campaign.
    """
    return simulate_run(config.simulation, config.training_runs + eval_index)


def train_pipeline_forest(config: PipelineConfig, filter_weak: bool = True) -> Forest:
    """Build the training set, train the forest, and filter weak trees."""
    instances = build_training_set(config)
    forest = train_forest(
        instances,
        num_trees=config.num_trees,
        impurity=config.impurity,
        fraction=config.sample_fraction,
        seed=config.simulation.seed,
    )
    if filter_weak:
        forest = filter_weak_trees(forest)
    return forest


def predict_levels(
    forest: Forest,
    frames: Sequence[ObservationFrame],
    thresholds: ThresholdTable,
    table: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Forest verdict per frame, via the precomputed 125-cell decision table."""
    if table is None:
        table, _ = forest_decision_table(forest)
    idx = [feature_index(frame_features(frame, thresholds)) for frame in frames]
    return table[idx]


def first_alarm_time(
    predicted_levels: Sequence[int],
    times: Sequence[int],
    alarm_level: int,
) -> Optional[int]:
    """First time the predicted level reaches the alarm level, if any."""
    for t, level in zip(times, predicted_levels):
        if level >= alarm_level:
            return t
    return None


def detect_failure(
    forest: Forest,
    frames: Sequence[ObservationFrame],
    thresholds: ThresholdTable,
    alarm_level: int = 4,
    run_id: int = 0,
    table: Optional[np.ndarray] = None,
) -> DetectionRecord:
    """Compare the forest's first alarm against the run's true failure time."""
    if not frames:
        raise ValueError("cannot run detection on an empty run")
    predicted = predict_levels(forest, frames, thresholds, table=table)
    detected = first_alarm_time(predicted, [f.time for f in frames], alarm_level)
    actual = frames[-1].failure_time
    return DetectionRecord(run_id, actual, detected)


class ErrorRates(NamedTuple):
    """Per-tree average misclassification rate and the post-vote rate."""

    per_tree_mean: float
    forest: float


def misclassification_rate(
    forest: Forest, instances: Sequence[LabeledInstance]
) -> ErrorRates:
    """Mean per-tree error over the instances, plus the forest-level error.

    A tree errs when its own verdict differs from the instance's global
    level; the forest errs when the majority vote does.
    """
    if not instances:
        raise ValueError("cannot evaluate on an empty instance list")
    if not forest.trees:
        raise ValueError("cannot evaluate an empty forest")
    idx = np.array([feature_index(inst.features) for inst in instances])
    labels = np.array([inst.global_level for inst in instances])
    table, _ = forest_decision_table(forest)

    per_tree_errors = []
    for tree in forest.trees:
        tree_table = np.array(
            [tree_diagnose(tree, fv) for fv in _ALL_CELLS], dtype=np.int8)
        per_tree_errors.append(float(np.mean(tree_table[idx] != labels)))
    return ErrorRates(
        per_tree_mean=float(np.mean(per_tree_errors)),
        forest=float(np.mean(table[idx] != labels)),
    )


def success_rate(
    forest: Forest,
    frames: Sequence[ObservationFrame],
    thresholds: ThresholdTable,
    table: Optional[np.ndarray] = None,
) -> float:
    """Fraction of frames diagnosed at their true (uncorrupted) global level."""
    if not frames:
        raise ValueError("cannot evaluate on an empty frame list")
    predicted = predict_levels(forest, frames, thresholds, table=table)
    truth = np.array([true_global_level(frame, thresholds) for frame in frames])
    return float(np.mean(predicted == truth))
