import numpy as np
import pytest

from wsnforest.errors import ConfigurationError
from wsnforest.forest import Forest, grow_tree
from wsnforest.levels import FeatureVector, LabeledInstance, ThresholdTable, label_frames
from wsnforest.pipeline import (
    DetectionRecord,
    PipelineConfig,
    build_training_set,
    detect_failure,
    first_alarm_time,
    misclassification_rate,
    simulate_eval_run,
    success_rate,
    train_pipeline_forest,
)
from wsnforest.simulation import SimulationConfig, simulate_run


def make_instances(rows):
    return [
        LabeledInstance(i + 1, FeatureVector(*f), label)
        for i, (f, label) in enumerate(rows)
    ]


def constant_forest(level):
    return Forest(trees=(grow_tree(make_instances([((1, 1, 1), level)])),))


@pytest.fixture(scope="module")
def small_pipeline_config():
    return PipelineConfig(
        simulation=SimulationConfig(experiment_set=1, seed=51, steps=30, runs=1),
        num_trees=10,
        training_runs=3,
    )


class TestPipelineConfig:
    def test_defaults(self):
        config = PipelineConfig(simulation=SimulationConfig(experiment_set=1, seed=1))
        assert config.num_trees == 100
        assert config.alarm_level == 4
        assert config.training_runs == 10
        assert config.thresholds == ThresholdTable.default()

    def test_round_trip_dict(self, small_pipeline_config):
        data = small_pipeline_config.to_dict()
        assert PipelineConfig.from_dict(data) == small_pipeline_config

    def test_rejects_unknown_keys(self, small_pipeline_config):
        data = small_pipeline_config.to_dict()
        data["bogus"] = 1
        with pytest.raises(ConfigurationError):
            PipelineConfig.from_dict(data)

    def test_rejects_bad_alarm_level(self):
        with pytest.raises(ConfigurationError):
            PipelineConfig(
                simulation=SimulationConfig(experiment_set=1, seed=1),
                alarm_level=1)

    def test_requires_simulation_section(self):
        with pytest.raises(ConfigurationError):
            PipelineConfig.from_dict({"num_trees": 5})


class TestBuildTrainingSet:
    def test_default_config_yields_1000_instances(self):
        config = PipelineConfig(simulation=SimulationConfig(experiment_set=1, seed=3))
        assert config.training_runs * config.simulation.steps == 1000
        instances = build_training_set(config)
        assert len(instances) == 1000

    def test_single_run_yields_steps_instances(self, small_pipeline_config):
        config = PipelineConfig(
            simulation=small_pipeline_config.simulation, training_runs=1)
        assert len(build_training_set(config)) == config.simulation.steps

    def test_deterministic(self, small_pipeline_config):
        assert build_training_set(small_pipeline_config) \
            == build_training_set(small_pipeline_config)

    def test_labels_skew_low_early_in_runs(self):
        # Monte Carlo over >= 100 runs (frozen from this pipeline): early
        # frames carry low labels, late frames sit at level 5.  Humidity
        # noise (std 12.5 over 10 sensors) pushes most early frames to level
        # 2, so the level-1 share at t <= 10 is ~0.135, and levels <= 2
        # cover ~0.78 of early frames.
        config = PipelineConfig(
            simulation=SimulationConfig(experiment_set=1, seed=77),
            training_runs=100)
        instances = build_training_set(config)
        early = [i.global_level for i in instances if i.time <= 10]
        late = [i.global_level for i in instances if i.time > 50]
        assert np.mean(early) < np.mean(late)
        assert np.mean([lvl == 1 for lvl in late]) == 0.0
        assert np.mean([lvl == 1 for lvl in early]) == pytest.approx(0.135, abs=0.04)
        assert np.mean([lvl <= 2 for lvl in early]) == pytest.approx(0.78, abs=0.05)
        assert np.mean(late) == pytest.approx(5.0, abs=0.05)

    def test_eval_runs_disjoint_from_training(self, small_pipeline_config):
        training_first = simulate_run(
            small_pipeline_config.simulation, 0)
        eval_first = simulate_eval_run(small_pipeline_config, 0)
        assert not np.array_equal(training_first[0].values, eval_first[0].values)


class TestDetectFailure:
    def test_delay_arithmetic(self):
        record = DetectionRecord(0, actual_failure_time=40, detected_time=43)
        assert record.delay == 3

    def test_early_detection_negative_delay(self):
        record = DetectionRecord(0, actual_failure_time=40, detected_time=35)
        assert record.delay == -5

    def test_missing_times_give_no_delay(self):
        assert DetectionRecord(0, None, 10).delay is None
        assert DetectionRecord(0, 10, None).delay is None
        assert DetectionRecord(0, None, None).is_empty

    def test_first_alarm_time(self):
        predicted = [1, 2, 3, 4, 5]
        times = [1, 2, 3, 4, 5]
        assert first_alarm_time(predicted, times, 4) == 4
        assert first_alarm_time(predicted, times, 2) == 2
        assert first_alarm_time([1, 1, 1], [1, 2, 3], 4) is None

    def test_lowering_alarm_never_detects_later(self, rng):
        for _ in range(50):
            predicted = rng.integers(1, 6, size=40)
            times = np.arange(1, 41)
            detections = [
                first_alarm_time(predicted, times, level)
                for level in (5, 4, 3, 2)
            ]
            defined = [d for d in detections if d is not None]
            # As the alarm level drops, detections only appear or move earlier.
            for earlier, later in zip(detections, detections[1:]):
                if earlier is not None:
                    assert later is not None and later <= earlier
            assert defined == sorted(defined, reverse=True)

    def test_detect_failure_on_constant_forest(self, default_thresholds):
        config = SimulationConfig(experiment_set=1, seed=8, steps=25,
                                  failure_rate_denominator=1e12,
                                  sensor_breakdown_prob=0.0)
        frames = simulate_run(config, 0)
        always_alarm = constant_forest(5)
        record = detect_failure(always_alarm, frames, default_thresholds,
                                alarm_level=4, run_id=7)
        assert record.run_id == 7
        assert record.detected_time == 1
        assert record.actual_failure_time is None
        assert record.delay is None
        never_alarm = constant_forest(1)
        record = detect_failure(never_alarm, frames, default_thresholds)
        assert record.is_empty


class TestMetrics:
    def test_perfect_forest_has_zero_error(self):
        instances = make_instances([((1, 1, 1), 1), ((5, 1, 1), 5)] * 10)
        forest = Forest(trees=(grow_tree(instances),))
        rates = misclassification_rate(forest, instances)
        assert rates.per_tree_mean == 0.0
        assert rates.forest == 0.0

    def test_single_tree_half_wrong(self):
        tree = grow_tree(make_instances([((1, 1, 1), 1)]))
        forest = Forest(trees=(tree,))
        instances = make_instances([((1, 1, 1), 1), ((1, 1, 1), 5)] * 5)
        rates = misclassification_rate(forest, instances)
        assert rates.per_tree_mean == 0.5
        assert rates.forest == 0.5

    def test_empty_inputs_rejected(self):
        forest = constant_forest(1)
        with pytest.raises(ValueError):
            misclassification_rate(forest, [])

    def test_success_rate_perfect_and_constant(self, default_thresholds):
        config = SimulationConfig(experiment_set=1, seed=12, steps=20,
                                  failure_rate_denominator=1e12,
                                  sensor_breakdown_prob=0.0)
        frames = simulate_run(config, 0)
        truth = [max(i.features) for i in label_frames(frames, default_thresholds)]
        always_one = constant_forest(1)
        expected = np.mean([t == 1 for t in truth])
        assert success_rate(always_one, frames, default_thresholds) \
            == pytest.approx(expected)

    def test_perfect_forest_scores_one(self, default_thresholds):
        # Without sensor corruption the observed labels are the true labels,
        # so a full-fraction tree grown on the run itself scores exactly 1.0.
        config = SimulationConfig(experiment_set=1, seed=33, steps=40,
                                  failure_rate_denominator=500.0,
                                  sensor_breakdown_prob=0.0)
        frames = simulate_run(config, 0)
        instances = label_frames(frames, default_thresholds)
        forest = Forest(trees=(grow_tree(instances),))
        assert success_rate(forest, frames, default_thresholds) == 1.0

    def test_forest_error_not_above_per_tree_on_default_corpus(self):
        # Voting should not hurt on the default regime (checked empirically
        # on a frozen seed, reported if violated elsewhere).
        config = PipelineConfig(
            simulation=SimulationConfig(experiment_set=1, seed=90, steps=50),
            num_trees=20, training_runs=2)
        forest = train_pipeline_forest(config)
        eval_frames = simulate_eval_run(config, 0)
        instances = label_frames(eval_frames, config.thresholds)
        rates = misclassification_rate(forest, instances)
        assert rates.forest <= rates.per_tree_mean + 1e-12


class TestTrainPipelineForest:
    def test_trains_and_filters(self, small_pipeline_config):
        forest = train_pipeline_forest(small_pipeline_config)
        assert 1 <= len(forest.trees) <= small_pipeline_config.num_trees
        assert forest.impurity == "entropy"

    def test_deterministic(self, small_pipeline_config):
        from wsnforest.forest import forest_to_dict

        a = train_pipeline_forest(small_pipeline_config)
        b = train_pipeline_forest(small_pipeline_config)
        assert forest_to_dict(a) == forest_to_dict(b)
