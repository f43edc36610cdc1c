import numpy as np
import pytest
from hypothesis import given, strategies as st

from wsnforest.errors import ConfigurationError
from wsnforest.levels import (
    FeatureVector,
    ThresholdTable,
    frame_category_level,
    frame_features,
    global_level,
    label_frames,
    quantize,
    quantize_array,
    true_global_level,
    write_instances_csv,
)
from wsnforest.simulation import (
    NUM_SENSORS,
    ObservationFrame,
    SensorCategory,
    SimulationConfig,
    simulate_many,
    simulate_run,
)


def make_frame(values, broken=None, true_values=None, time=1, failure_time=None):
    values = np.asarray(values, dtype=float)
    failed = np.zeros(NUM_SENSORS, dtype=bool)
    if failure_time is not None:
        failed[0] = True
    return ObservationFrame(
        time=time,
        values=values,
        true_values=np.asarray(true_values, dtype=float) if true_values is not None else values.copy(),
        sensor_broken=np.asarray(broken, dtype=bool) if broken is not None else np.zeros(NUM_SENSORS, dtype=bool),
        device_failed=failed,
        failure_time=failure_time,
    )


def healthy_values():
    values = np.empty(NUM_SENSORS)
    values[:50] = 20.0
    values[50:100] = 5.0
    values[100:] = 52.5
    return values


class TestThresholdTable:
    def test_defaults(self, default_thresholds):
        assert default_thresholds.temperature == (22.9, 24.5, 26.0, 28.0)
        assert default_thresholds.pressure == (5.99, 6.4, 7.9, 9.0)
        assert default_thresholds.humidity == (68.0, 80.0, 92.0, 95.0)

    def test_rejects_non_ascending(self):
        with pytest.raises(ConfigurationError):
            ThresholdTable((1, 1, 2, 3), (1, 2, 3, 4), (1, 2, 3, 4))

    def test_rejects_wrong_arity(self):
        with pytest.raises(ConfigurationError):
            ThresholdTable((1, 2, 3), (1, 2, 3, 4), (1, 2, 3, 4))

    def test_dict_round_trip(self, default_thresholds):
        assert ThresholdTable.from_dict(default_thresholds.to_dict()) == default_thresholds

    def test_from_dict_rejects_unknown_keys(self, default_thresholds):
        data = default_thresholds.to_dict()
        data["wind"] = [1, 2, 3, 4]
        with pytest.raises(ConfigurationError):
            ThresholdTable.from_dict(data)


class TestQuantize:
    @pytest.mark.parametrize("value,expected", [
        (21.0, 1),    # below the first threshold is normal
        (29.0, 5),    # above the last threshold is most abnormal
        (22.9, 2),    # thresholds belong to the upper bin
        (24.5, 3),
        (26.0, 4),
        (28.0, 5),
    ])
    def test_temperature_bins(self, value, expected, default_thresholds):
        assert quantize(value, SensorCategory.TEMPERATURE, default_thresholds) == expected

    def test_humidity_boundary(self, default_thresholds):
        assert quantize(80.0, SensorCategory.HUMIDITY, default_thresholds) == 3

    def test_non_finite_rejected(self, default_thresholds):
        for bad in (float("nan"), float("inf"), float("-inf")):
            with pytest.raises(ValueError):
                quantize(bad, SensorCategory.TEMPERATURE, default_thresholds)

    def test_array_agrees_with_scalar(self, default_thresholds):
        values = np.linspace(15, 35, 201)
        array_levels = quantize_array(values, SensorCategory.TEMPERATURE, default_thresholds)
        scalar_levels = [quantize(v, SensorCategory.TEMPERATURE, default_thresholds)
                         for v in values]
        assert list(array_levels) == scalar_levels

    @given(st.floats(min_value=-100, max_value=200, allow_nan=False),
           st.floats(min_value=-100, max_value=200, allow_nan=False))
    def test_monotone(self, a, b):
        thresholds = ThresholdTable.default()
        lo, hi = min(a, b), max(a, b)
        assert (quantize(lo, SensorCategory.TEMPERATURE, thresholds)
                <= quantize(hi, SensorCategory.TEMPERATURE, thresholds))

    def test_surjective_on_defaults(self, default_thresholds):
        for category, probes in [
            (SensorCategory.TEMPERATURE, (20, 23, 25, 27, 30)),
            (SensorCategory.PRESSURE, (5, 6.1, 7, 8.5, 10)),
            (SensorCategory.HUMIDITY, (50, 70, 85, 93, 99)),
        ]:
            levels = {quantize(v, category, default_thresholds) for v in probes}
            assert levels == {1, 2, 3, 4, 5}


class TestFrameAggregation:
    def test_category_level_is_max(self, default_thresholds):
        values = healthy_values()
        values[3] = 35.0  # one abnormal temperature reading dominates
        frame = make_frame(values)
        assert frame_category_level(frame, SensorCategory.TEMPERATURE,
                                    default_thresholds) == 5
        assert frame_category_level(frame, SensorCategory.PRESSURE,
                                    default_thresholds) == 1

    def test_all_normal_gives_level_one(self, default_thresholds):
        frame = make_frame(healthy_values())
        assert global_level(frame, default_thresholds) == 1
        assert frame_features(frame, default_thresholds) == FeatureVector(1, 1, 1)

    def test_broken_and_failed_composition(self, default_thresholds):
        # One broken temperature sensor (sentinel 0 -> level 1) plus one
        # failed location reading 35.0 -> category level 5.
        values = healthy_values()
        broken = np.zeros(NUM_SENSORS, dtype=bool)
        values[0] = 0.0
        broken[0] = True
        values[1] = 35.0
        frame = make_frame(values, broken=broken)
        assert frame_category_level(frame, SensorCategory.TEMPERATURE,
                                    default_thresholds) == 5

    def test_single_level5_reading_dominates_global(self, default_thresholds):
        values = healthy_values()
        values[107] = 99.0
        frame = make_frame(values)
        assert global_level(frame, default_thresholds) == 5

    def test_global_equals_max_over_categories(self, small_set1_config, default_thresholds):
        for frames in simulate_many(small_set1_config):
            for frame in frames:
                by_category = max(
                    frame_category_level(frame, c, default_thresholds)
                    for c in SensorCategory
                )
                assert global_level(frame, default_thresholds) == by_category

    def test_true_global_level_uses_uncorrupted_values(self, default_thresholds):
        values = healthy_values()
        true_values = values.copy()
        broken = np.zeros(NUM_SENSORS, dtype=bool)
        values[2] = 0.0       # broken sensor hides the abnormal reading
        broken[2] = True
        true_values[2] = 35.0
        frame = make_frame(values, broken=broken, true_values=true_values)
        assert global_level(frame, default_thresholds) == 1
        assert true_global_level(frame, default_thresholds) == 5


class TestLabelFrames:
    def test_one_instance_per_frame(self, small_set1_config, default_thresholds):
        frames = simulate_run(small_set1_config, 0)
        instances = label_frames(frames, default_thresholds)
        assert len(instances) == len(frames)
        assert [i.time for i in instances] == [f.time for f in frames]

    def test_label_is_max_of_features(self, small_set1_config, default_thresholds):
        frames = simulate_run(small_set1_config, 0)
        for inst in label_frames(frames, default_thresholds):
            assert inst.global_level == max(inst.features)

    def test_ten_runs_of_100_steps_give_1000_instances(self, default_thresholds):
        config = SimulationConfig(experiment_set=1, seed=2, steps=100, runs=10)
        instances = []
        for frames in simulate_many(config):
            instances.extend(label_frames(frames, default_thresholds))
        assert len(instances) == 1000

    def test_instances_csv(self, tmp_path, small_set1_config, default_thresholds):
        runs = [
            label_frames(frames, default_thresholds)
            for frames in simulate_many(small_set1_config)
        ]
        path = tmp_path / "instances.csv"
        write_instances_csv(path, runs)
        lines = path.read_text().splitlines()
        assert lines[0] == "run,t,temp_level,pressure_level,humidity_level,global_level"
        assert len(lines) == 1 + sum(len(r) for r in runs)
        run_id, t, *levels = lines[1].split(",")
        assert (run_id, t) == ("0", "1")
        assert [int(v) for v in levels] == [*runs[0][0].features, runs[0][0].global_level]
