"""Sensor-fleet simulation of a degrading industrial device.

A monitored device carries 110 wireless sensors: 50 temperature, 50 pressure
and 10 humidity nodes.  Each time step every sensor reports one reading.
Three processes drive the data:

* a healthy law per category whose mean drifts upward with time (the device
  slowly degrades even while "healthy"),
* a latched per-location device failure (Bernoulli draw each step) that
  switches readings at that location to the failure distribution from the
  next step on,
* a latched per-sensor breakdown that makes the node emit a constant
  sentinel value from the step where it occurs, simulating lost packets.

Experiment set 1 draws every category independently; set 2 replaces healthy
pressure and humidity readings by noiseless affine functions of one
reference temperature reading per frame.

Everything is driven by numpy Generators seeded from the run configuration,
so identical configs produce bit-identical output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DataFormatError


class SensorCategory(str, Enum):
    TEMPERATURE = "temperature"
    PRESSURE = "pressure"
    HUMIDITY = "humidity"


#: Canonical category order used for sensor layout and for deterministic
#: tie-breaking wherever categories compete.
CATEGORY_ORDER = (
    SensorCategory.TEMPERATURE,
    SensorCategory.PRESSURE,
    SensorCategory.HUMIDITY,
)

SENSOR_COUNTS = {
    SensorCategory.TEMPERATURE: 50,
    SensorCategory.PRESSURE: 50,
    SensorCategory.HUMIDITY: 10,
}

NUM_SENSORS = 110

#: Sensor ids are fixed: 0-49 temperature, 50-99 pressure, 100-109 humidity.
CATEGORY_SLICES = {
    SensorCategory.TEMPERATURE: slice(0, 50),
    SensorCategory.PRESSURE: slice(50, 100),
    SensorCategory.HUMIDITY: slice(100, 110),
}

#: Integer category code per sensor index (0=temperature, 1=pressure, 2=humidity).
CATEGORY_CODES = np.repeat(np.arange(3, dtype=np.int8), [50, 50, 10])

# Substream tags keep simulation draws and forest sampling draws on disjoint
# random streams even when both derive from the same user seed.
_SIM_STREAM = 0


def category_of(sensor_id: int) -> SensorCategory:
    if not 0 <= sensor_id < NUM_SENSORS:
        raise ValueError(f"sensor_id {sensor_id} out of range 0..{NUM_SENSORS - 1}")
    return CATEGORY_ORDER[CATEGORY_CODES[sensor_id]]


@dataclass(frozen=True)
class SensorModel:
    """Distributional model of one sensor category.

    The healthy mean is affine in time: ``base_mean * (1 + drift_rate * t)``.
    When ``correlation`` is set (experiment set 2, pressure and humidity),
    healthy readings are ``slope * x + intercept`` of the frame's reference
    temperature ``x`` instead of a Gaussian draw.
    """

    category: SensorCategory
    base_mean: float
    drift_rate: float
    healthy_std: float
    failure_mean: float
    failure_std: float
    breakdown_sentinel: float
    correlation: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.healthy_std <= 0 or self.failure_std <= 0:
            raise ConfigurationError("sensor standard deviations must be positive")

    def healthy_mean(self, t: float) -> float:
        return self.base_mean * (1.0 + self.drift_rate * t)


def sensor_models(experiment_set: int) -> dict[SensorCategory, SensorModel]:
    """Per-category sensor models for the requested experiment set."""
    if experiment_set not in (1, 2):
        raise ConfigurationError(f"experiment_set must be 1 or 2, got {experiment_set!r}")
    temperature = SensorModel(
        SensorCategory.TEMPERATURE,
        base_mean=20.0, drift_rate=0.005, healthy_std=1.0,
        failure_mean=35.0, failure_std=1.0, breakdown_sentinel=0.0,
    )
    pressure = SensorModel(
        SensorCategory.PRESSURE,
        base_mean=5.0, drift_rate=0.01, healthy_std=0.3,
        failure_mean=15.0, failure_std=1.0, breakdown_sentinel=1.0,
    )
    humidity = SensorModel(
        SensorCategory.HUMIDITY,
        base_mean=52.5, drift_rate=0.001, healthy_std=12.5,
        failure_mean=70.0, failure_std=10.0, breakdown_sentinel=0.0,
    )
    if experiment_set == 2:
        pressure = replace(pressure, correlation=(0.5, 10.0))
        humidity = replace(humidity, correlation=(525.0, 12.0))
    return {
        SensorCategory.TEMPERATURE: temperature,
        SensorCategory.PRESSURE: pressure,
        SensorCategory.HUMIDITY: humidity,
    }


@dataclass(frozen=True)
class SensorState:
    """Latched per-sensor status flags.  Both flags are monotone within a run."""

    sensor_id: int
    category: SensorCategory
    device_failed_here: bool = False
    sensor_broken: bool = False


@dataclass(frozen=True)
class SimulationConfig:
    experiment_set: int
    seed: int
    steps: int = 100
    runs: int = 1
    failure_rate_denominator: float = 35000.0
    sensor_breakdown_prob: float = 0.005

    def __post_init__(self):
        if self.experiment_set not in (1, 2):
            raise ConfigurationError(
                f"experiment_set must be 1 or 2, got {self.experiment_set!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigurationError("seed must be an integer")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must be a non-negative 64-bit integer")
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ConfigurationError(f"steps must be a positive integer, got {self.steps!r}")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise ConfigurationError(f"runs must be a positive integer, got {self.runs!r}")
        if not self.failure_rate_denominator > 0:
            raise ConfigurationError("failure_rate_denominator must be positive")
        if self.steps / self.failure_rate_denominator > 1.0:
            raise ConfigurationError(
                "steps / failure_rate_denominator exceeds 1: the per-step failure "
                "draw would not be a probability")
        if not 0.0 <= self.sensor_breakdown_prob < 1.0:
            raise ConfigurationError("sensor_breakdown_prob must be in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "experiment_set": self.experiment_set,
            "seed": self.seed,
            "steps": self.steps,
            "runs": self.runs,
            "failure_rate_denominator": self.failure_rate_denominator,
            "sensor_breakdown_prob": self.sensor_breakdown_prob,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        unknown = set(data) - {
            "experiment_set", "seed", "steps", "runs",
            "failure_rate_denominator", "sensor_breakdown_prob",
        }
        if unknown:
            raise ConfigurationError(f"unknown simulation config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc


class SensorReading(NamedTuple):
    sensor_id: int
    category: SensorCategory
    value: float
    sensor_broken: bool
    device_failed_here: bool


@dataclass(frozen=True)
class ObservationFrame:
    """One time step of readings from the whole fleet, stored columnar.

    ``values`` are what the network reports (sentinels where sensors are
    broken); ``true_values`` are the readings each sensor would have produced
    had no sensor broken down anywhere, and serve as ground truth for
    diagnostic scoring.  ``device_failed`` and ``failure_time`` describe the
    device state established *during* this step; readings lag the failure
    draw by one step, mirroring the generation loop (sense first, then draw).
    """

    time: int
    values: np.ndarray
    true_values: np.ndarray
    sensor_broken: np.ndarray
    device_failed: np.ndarray
    failure_time: Optional[int]

    def __post_init__(self):
        for name in ("values", "true_values", "sensor_broken", "device_failed"):
            arr = getattr(self, name)
            if arr.shape != (NUM_SENSORS,):
                raise ValueError(f"{name} must have shape ({NUM_SENSORS},), got {arr.shape}")

    @property
    def device_has_failed(self) -> bool:
        return self.failure_time is not None

    def category_values(self, category: SensorCategory) -> np.ndarray:
        return self.values[CATEGORY_SLICES[category]]

    def readings(self) -> Iterator[SensorReading]:
        for i in range(NUM_SENSORS):
            yield SensorReading(
                i,
                CATEGORY_ORDER[CATEGORY_CODES[i]],
                float(self.values[i]),
                bool(self.sensor_broken[i]),
                bool(self.device_failed[i]),
            )


def step_sensor(
    state: SensorState,
    t: int,
    model: SensorModel,
    rng: np.random.Generator,
    temp_value: Optional[float] = None,
) -> tuple[float, SensorState]:
    """Produce one reading for one sensor given its current latched state.

    Broken sensors report the category sentinel; sensors at a failed device
    location draw from the failure law; otherwise the healthy law applies
    (a Gaussian, or the affine function of ``temp_value`` for correlated
    categories).  State transitions are drawn by the caller, so the returned
    state is the input state unchanged.
    """
    if t < 1:
        raise ConfigurationError(f"time step must be >= 1, got {t}")
    if state.sensor_broken:
        return model.breakdown_sentinel, state
    if state.device_failed_here:
        return float(rng.normal(model.failure_mean, model.failure_std)), state
    if model.correlation is not None:
        if temp_value is None:
            raise ValueError(
                "correlated healthy draw requires the frame's reference "
                "temperature reading")
        slope, intercept = model.correlation
        return slope * temp_value + intercept, state
    return float(rng.normal(model.healthy_mean(t), model.healthy_std)), state


def draw_device_failure(
    t: int, config: SimulationConfig, rng: np.random.Generator
) -> bool:
    """One Bernoulli failure draw with success probability t / denominator."""
    p = t / config.failure_rate_denominator
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(
            f"failure probability {p} at t={t} is outside [0, 1]")
    return bool(rng.random() < p)


class _ModelArrays:
    """Per-sensor parameter vectors derived from the category models."""

    def __init__(self, models: dict[SensorCategory, SensorModel]):
        counts = [SENSOR_COUNTS[c] for c in CATEGORY_ORDER]
        per = lambda attr: np.repeat([getattr(models[c], attr) for c in CATEGORY_ORDER], counts)
        self.base_mean = per("base_mean")
        self.drift_rate = per("drift_rate")
        self.healthy_std = per("healthy_std")
        self.failure_mean = per("failure_mean")
        self.failure_std = per("failure_std")
        self.sentinel = per("breakdown_sentinel")
        corr = [models[c].correlation for c in CATEGORY_ORDER]
        self.correlated = np.repeat([c is not None for c in corr], counts)
        self.corr_slope = np.repeat([c[0] if c else 0.0 for c in corr], counts)
        self.corr_intercept = np.repeat([c[1] if c else 0.0 for c in corr], counts)

    def healthy_mean(self, t: int) -> np.ndarray:
        return self.base_mean * (1.0 + self.drift_rate * t)


def simulate_run(config: SimulationConfig, run_index: int = 0) -> list[ObservationFrame]:
    """Simulate one run of ``config.steps`` frames.

    Each run owns an independent random stream derived from
    ``(config.seed, run_index)``, so runs are reproducible individually and
    may be generated in parallel.  Within a step the order is: latch new
    sensor breakdowns, produce all 110 readings, then draw device failures
    per not-yet-failed location (a failure drawn at step t switches that
    location's readings from step t+1 on).
    """
    if run_index < 0:
        raise ConfigurationError(f"run_index must be >= 0, got {run_index}")
    rng = np.random.default_rng([config.seed, _SIM_STREAM, run_index])
    models = sensor_models(config.experiment_set)
    arrays = _ModelArrays(models)
    temp_model = models[SensorCategory.TEMPERATURE]

    broken = np.zeros(NUM_SENSORS, dtype=bool)
    failed = np.zeros(NUM_SENSORS, dtype=bool)
    failure_time: Optional[int] = None
    p_fail_scale = 1.0 / config.failure_rate_denominator

    frames: list[ObservationFrame] = []
    for t in range(1, config.steps + 1):
        if config.sensor_breakdown_prob > 0.0:
            broken = broken | (rng.random(NUM_SENSORS) < config.sensor_breakdown_prob)

        z = rng.standard_normal(NUM_SENSORS)
        means = np.where(failed, arrays.failure_mean, arrays.healthy_mean(t))
        stds = np.where(failed, arrays.failure_std, arrays.healthy_std)
        true_values = means + stds * z

        if config.experiment_set == 2:
            healthy_corr = arrays.correlated & ~failed
            # Ground truth assumes no breakdowns, so the reference is always
            # the lowest-id temperature sensor.
            x_true = true_values[0]
            true_values = np.where(
                healthy_corr,
                arrays.corr_slope * x_true + arrays.corr_intercept,
                true_values,
            )
            values = true_values.copy()
            operational_temp = np.flatnonzero(~broken[CATEGORY_SLICES[SensorCategory.TEMPERATURE]])
            if operational_temp.size:
                x_obs = values[operational_temp[0]]
            else:
                x_obs = temp_model.healthy_mean(t)
            values = np.where(
                healthy_corr,
                arrays.corr_slope * x_obs + arrays.corr_intercept,
                values,
            )
        else:
            values = true_values.copy()

        values = np.where(broken, arrays.sentinel, values)

        new_failures = ~failed & (rng.random(NUM_SENSORS) < t * p_fail_scale)
        if failure_time is None and new_failures.any():
            failure_time = t
        failed = failed | new_failures

        frames.append(ObservationFrame(
            time=t,
            values=values,
            true_values=true_values,
            sensor_broken=broken.copy(),
            device_failed=failed.copy(),
            failure_time=failure_time,
        ))
    return frames


def simulate_many(
    config: SimulationConfig,
    n_runs: Optional[int] = None,
    first_run_index: int = 0,
) -> list[list[ObservationFrame]]:
    """Simulate ``n_runs`` (default ``config.runs``) independent runs."""
    if n_runs is None:
        n_runs = config.runs
    return [simulate_run(config, first_run_index + i) for i in range(n_runs)]


FRAMES_CSV_HEADER = (
    "run", "t", "sensor_id", "category", "value",
    "sensor_broken", "device_failed_here", "ground_truth_failure_time",
)


def write_frames_csv(path, runs: Sequence[Sequence[ObservationFrame]]) -> None:
    """Write runs of frames as CSV, one row per reading."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FRAMES_CSV_HEADER)
        for run_id, frames in enumerate(runs):
            for frame in frames:
                failure = "" if frame.failure_time is None else frame.failure_time
                for r in frame.readings():
                    writer.writerow([
                        run_id, frame.time, r.sensor_id, r.category.value,
                        repr(r.value), int(r.sensor_broken),
                        int(r.device_failed_here), failure,
                    ])


def read_frames_csv(path) -> list[list[ObservationFrame]]:
    """Read frames back from the CSV schema written by :func:`write_frames_csv`.

    Corrected (``true``) values are not serialized; on load they are set to
    the observed values.
    """
    rows_by_frame: dict[tuple[int, int], list] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FRAMES_CSV_HEADER:
            raise DataFormatError(f"unexpected header {header!r}", line=1)
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(FRAMES_CSV_HEADER):
                raise DataFormatError(
                    f"expected {len(FRAMES_CSV_HEADER)} fields, got {len(row)}",
                    line=line_no)
            try:
                run_id = int(row[0])
                t = int(row[1])
                sensor_id = int(row[2])
                category = SensorCategory(row[3])
                value = float(row[4])
                sensor_broken = bool(int(row[5]))
                device_failed = bool(int(row[6]))
                failure_time = None if row[7] == "" else int(row[7])
            except (ValueError, KeyError) as exc:
                raise DataFormatError(str(exc), line=line_no) from exc
            if not math.isfinite(value):
                raise DataFormatError(f"non-finite value {row[4]!r}", line=line_no)
            if category_of(sensor_id) is not category:
                raise DataFormatError(
                    f"sensor {sensor_id} is not a {category.value} sensor",
                    line=line_no)
            rows_by_frame.setdefault((run_id, t), []).append(
                (sensor_id, value, sensor_broken, device_failed, failure_time, line_no))

    runs: dict[int, dict[int, ObservationFrame]] = {}
    for (run_id, t), rows in rows_by_frame.items():
        if len(rows) != NUM_SENSORS:
            raise DataFormatError(
                f"run {run_id} t {t}: expected {NUM_SENSORS} readings, got {len(rows)}",
                line=rows[0][5])
        values = np.empty(NUM_SENSORS)
        broken = np.zeros(NUM_SENSORS, dtype=bool)
        failed = np.zeros(NUM_SENSORS, dtype=bool)
        seen = set()
        failure_time = rows[0][4]
        for sensor_id, value, sensor_broken, device_failed, ft, line_no in rows:
            if sensor_id in seen:
                raise DataFormatError(
                    f"duplicate sensor {sensor_id} in run {run_id} t {t}", line=line_no)
            if ft != failure_time:
                raise DataFormatError(
                    f"inconsistent failure time within run {run_id} t {t}", line=line_no)
            seen.add(sensor_id)
            values[sensor_id] = value
            broken[sensor_id] = sensor_broken
            failed[sensor_id] = device_failed
        runs.setdefault(run_id, {})[t] = ObservationFrame(
            time=t, values=values, true_values=values.copy(),
            sensor_broken=broken, device_failed=failed, failure_time=failure_time)

    out = []
    for run_id in sorted(runs):
        frames = [runs[run_id][t] for t in sorted(runs[run_id])]
        out.append(frames)
    return out
