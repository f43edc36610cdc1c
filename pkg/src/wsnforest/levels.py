"""Functioning levels: threshold quantization and frame labeling.

Raw readings are mapped to ordinal functioning levels 1 (normal) through
5 (most abnormal) by four per-category thresholds.  A frame's feature
vector holds one level per category (the max over that category's sensors)
and its global failure level is the max over all sensors, which equals the
max of the three features.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError
from .simulation import (
    CATEGORY_ORDER,
    CATEGORY_SLICES,
    ObservationFrame,
    SensorCategory,
)

LEVELS = (1, 2, 3, 4, 5)

_DEFAULTS = {
    SensorCategory.TEMPERATURE: (22.9, 24.5, 26.0, 28.0),
    SensorCategory.PRESSURE: (5.99, 6.4, 7.9, 9.0),
    SensorCategory.HUMIDITY: (68.0, 80.0, 92.0, 95.0),
}


@dataclass(frozen=True)
class ThresholdTable:
    """Four strictly ascending thresholds per category.

    Values below the first threshold quantize to level 1; each threshold
    belongs to the bin above it (half-open intervals).
    """

    temperature: tuple[float, float, float, float]
    pressure: tuple[float, float, float, float]
    humidity: tuple[float, float, float, float]

    def __post_init__(self):
        for name in ("temperature", "pressure", "humidity"):
            thresholds = tuple(float(v) for v in getattr(self, name))
            if len(thresholds) != 4:
                raise ConfigurationError(f"{name} thresholds must have 4 values")
            if any(not math.isfinite(v) for v in thresholds):
                raise ConfigurationError(f"{name} thresholds must be finite")
            if any(a >= b for a, b in zip(thresholds, thresholds[1:])):
                raise ConfigurationError(
                    f"{name} thresholds must be strictly ascending, got {thresholds}")
            object.__setattr__(self, name, thresholds)

    @classmethod
    def default(cls) -> "ThresholdTable":
        return cls(*(_DEFAULTS[c] for c in CATEGORY_ORDER))

    def for_category(self, category: SensorCategory) -> tuple[float, ...]:
        return getattr(self, category.value)

    def to_dict(self) -> dict:
        return {c.value: list(self.for_category(c)) for c in CATEGORY_ORDER}

    @classmethod
    def from_dict(cls, data: dict) -> "ThresholdTable":
        unknown = set(data) - {c.value for c in CATEGORY_ORDER}
        if unknown:
            raise ConfigurationError(f"unknown threshold keys: {sorted(unknown)}")
        missing = {c.value for c in CATEGORY_ORDER} - set(data)
        if missing:
            raise ConfigurationError(f"missing threshold keys: {sorted(missing)}")
        return cls(*(tuple(data[c.value]) for c in CATEGORY_ORDER))


class FeatureVector(NamedTuple):
    temperature: int
    pressure: int
    humidity: int


@dataclass(frozen=True, slots=True)
class LabeledInstance:
    """One frame reduced to its feature vector and global failure level."""

    time: int
    features: FeatureVector
    global_level: int


def quantize(value: float, category: SensorCategory, thresholds: ThresholdTable) -> int:
    """Map one reading to its functioning level 1..5."""
    if not math.isfinite(value):
        raise ValueError(f"cannot quantize non-finite value {value!r}")
    return bisect_right(thresholds.for_category(category), value) + 1


def quantize_array(
    values: np.ndarray, category: SensorCategory, thresholds: ThresholdTable
) -> np.ndarray:
    """Vectorized :func:`quantize` over an array of readings."""
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values).all():
        raise ValueError("cannot quantize non-finite values")
    bins = np.asarray(thresholds.for_category(category))
    return (np.searchsorted(bins, values, side="right") + 1).astype(np.int8)


def frame_category_level(
    frame: ObservationFrame, category: SensorCategory, thresholds: ThresholdTable
) -> int:
    """Max functioning level over one category's readings in a frame."""
    levels = quantize_array(frame.values[CATEGORY_SLICES[category]], category, thresholds)
    return int(levels.max())


def frame_features(frame: ObservationFrame, thresholds: ThresholdTable) -> FeatureVector:
    return FeatureVector(*(frame_category_level(frame, c, thresholds) for c in CATEGORY_ORDER))


def global_level(frame: ObservationFrame, thresholds: ThresholdTable) -> int:
    """Global failure level: max level over all 110 readings."""
    return _max_level_of(frame.values, thresholds)


def true_global_level(frame: ObservationFrame, thresholds: ThresholdTable) -> int:
    """Global failure level of the frame's uncorrupted readings.

    Used as ground truth when scoring diagnostics: sensor breakdowns corrupt
    what the network reports, not the device's actual state.
    """
    return _max_level_of(frame.true_values, thresholds)


def _max_level_of(values: np.ndarray, thresholds: ThresholdTable) -> int:
    return max(
        int(quantize_array(values[CATEGORY_SLICES[c]], c, thresholds).max())
        for c in CATEGORY_ORDER
    )


def label_frames(
    frames: Sequence[ObservationFrame], thresholds: ThresholdTable
) -> list[LabeledInstance]:
    """One labeled instance per frame; the label is the max of the features."""
    instances = []
    for frame in frames:
        features = frame_features(frame, thresholds)
        instances.append(LabeledInstance(frame.time, features, max(features)))
    return instances


INSTANCES_CSV_HEADER = (
    "run", "t", "temp_level", "pressure_level", "humidity_level", "global_level",
)


def write_instances_csv(path, runs: Sequence[Sequence[LabeledInstance]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(INSTANCES_CSV_HEADER)
        for run_id, instances in enumerate(runs):
            for inst in instances:
                writer.writerow([
                    run_id, inst.time,
                    inst.features.temperature, inst.features.pressure,
                    inst.features.humidity, inst.global_level,
                ])
