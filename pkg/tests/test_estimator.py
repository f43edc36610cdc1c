import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from wsnforest.estimator import ForestLevelClassifier, FrameFeaturizer
from wsnforest.forest import forest_diagnose, forest_to_dict, train_forest
from wsnforest.levels import FeatureVector, LabeledInstance, ThresholdTable, label_frames
from wsnforest.simulation import simulate_run


def training_matrix(rng, n=80):
    X = rng.integers(1, 6, size=(n, 3))
    y = X.max(axis=1)
    return X, y


class TestForestLevelClassifier:
    def test_fit_predict_round_trip(self, rng):
        X, y = training_matrix(rng)
        clf = ForestLevelClassifier(n_trees=10, random_state=1).fit(X, y)
        predictions = clf.predict(X)
        assert predictions.shape == (len(X),)
        assert set(np.unique(predictions)) <= {1, 2, 3, 4, 5}
        assert clf.score(X, y) > 0.8

    def test_matches_functional_core(self, rng):
        X, y = training_matrix(rng, n=60)
        clf = ForestLevelClassifier(
            n_trees=7, random_state=3, filter_weak=False).fit(X, y)
        instances = [
            LabeledInstance(i + 1, FeatureVector(*map(int, row)), int(label))
            for i, (row, label) in enumerate(zip(X, y))
        ]
        forest = train_forest(instances, num_trees=7, seed=3)
        assert forest_to_dict(clf.forest_) == forest_to_dict(forest)
        probe = np.array([[1, 1, 1], [5, 2, 3], [2, 4, 4]])
        expected = [forest_diagnose(forest, fv)[0] for fv in probe]
        assert list(clf.predict(probe)) == expected

    def test_predict_votes_shape_and_sum(self, rng):
        X, y = training_matrix(rng)
        clf = ForestLevelClassifier(n_trees=9, random_state=0,
                                    filter_weak=False).fit(X, y)
        votes = clf.predict_votes(X[:5])
        assert votes.shape == (5, 5)
        assert (votes.sum(axis=1) == 9).all()

    def test_get_params_set_params(self):
        clf = ForestLevelClassifier(n_trees=20, impurity="gini")
        params = clf.get_params()
        assert params["n_trees"] == 20
        assert params["impurity"] == "gini"
        clf.set_params(n_trees=5)
        assert clf.n_trees == 5

    def test_clone_preserves_params(self):
        clf = ForestLevelClassifier(n_trees=3, impurity="gini", random_state=9)
        cloned = clone(clf)
        assert cloned.get_params() == clf.get_params()

    def test_input_validation(self, rng):
        clf = ForestLevelClassifier(n_trees=2)
        with pytest.raises(ValueError):
            clf.fit(np.zeros((3, 2)), [1, 2, 3])
        with pytest.raises(ValueError):
            clf.fit([[1, 2, 6]], [1])
        with pytest.raises(ValueError):
            clf.fit([[1, 2, 2.5]], [1])
        X, y = training_matrix(rng, n=10)
        with pytest.raises(ValueError):
            clf.fit(X, y[:-1])

    def test_predict_before_fit_rejected(self):
        with pytest.raises(ValueError, match="not fitted"):
            ForestLevelClassifier().predict([[1, 1, 1]])

    def test_deterministic_given_random_state(self, rng):
        X, y = training_matrix(rng)
        a = ForestLevelClassifier(n_trees=6, random_state=11).fit(X, y)
        b = ForestLevelClassifier(n_trees=6, random_state=11).fit(X, y)
        assert forest_to_dict(a.forest_) == forest_to_dict(b.forest_)


class TestFrameFeaturizer:
    def test_transform_matches_label_frames(self, small_set1_config, default_thresholds):
        frames = simulate_run(small_set1_config, 0)
        X = FrameFeaturizer(default_thresholds).fit().transform(frames)
        instances = label_frames(frames, default_thresholds)
        assert X.shape == (len(frames), 3)
        assert [tuple(row) for row in X] == [tuple(i.features) for i in instances]

    def test_default_thresholds_used_when_none(self, small_set1_config):
        frames = simulate_run(small_set1_config, 0)
        implicit = FrameFeaturizer().fit().transform(frames)
        explicit = FrameFeaturizer(ThresholdTable.default()).fit().transform(frames)
        assert np.array_equal(implicit, explicit)

    def test_composes_in_sklearn_pipeline(self, small_set1_config, default_thresholds):
        frames = simulate_run(small_set1_config, 0)
        labels = np.array(
            [i.global_level for i in label_frames(frames, default_thresholds)])
        model = Pipeline([
            ("levels", FrameFeaturizer(default_thresholds)),
            ("forest", ForestLevelClassifier(n_trees=10, random_state=2)),
        ])
        model.fit(frames, labels)
        assert model.score(frames, labels) == pytest.approx(1.0, abs=0.2)
