"""scikit-learn compatible wrappers around the forest and the quantizer.

These let the diagnostic forest compose with the wider ecosystem
(pipelines, model selection, cloning) while the functional core in
:mod:`wsnforest.forest` stays the single source of truth for the algorithm.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .forest import (
    filter_weak_trees,
    forest_decision_table,
    train_forest,
)
from .levels import FeatureVector, LabeledInstance, ThresholdTable, frame_features
from .validation import check_level_labels, check_levels_array


class ForestLevelClassifier(ClassifierMixin, BaseEstimator):
    """Random forest voting a device's failure level from category levels.

    Parameters
    ----------
    n_trees : number of trees grown before weak-tree filtering.
    impurity : "entropy" or "gini".
    sample_fraction : fraction of instances sampled per tree.
    with_replacement : bootstrap with replacement instead of subset extraction.
    filter_weak : drop trees whose out-of-sample error rate is >= 0.5.
    vote_tie_break : "highest" (default) or "lowest" tied level wins.
    random_state : seed for the per-tree sampling streams.
    """

    def __init__(
        self,
        n_trees: int = 100,
        impurity: str = "entropy",
        sample_fraction: float = 0.67,
        with_replacement: bool = False,
        filter_weak: bool = True,
        vote_tie_break: str = "highest",
        random_state: int = 0,
    ):
        self.n_trees = n_trees
        self.impurity = impurity
        self.sample_fraction = sample_fraction
        self.with_replacement = with_replacement
        self.filter_weak = filter_weak
        self.vote_tie_break = vote_tie_break
        self.random_state = random_state

    def fit(self, X, y, times: Optional[Sequence[int]] = None):
        """Fit on a (n_samples, 3) level matrix and level labels.

        ``times`` optionally attaches observation timestamps to the samples
        (recorded per tree for audit); it defaults to 1..n.
        """
        X = check_levels_array(X)
        y = check_level_labels(y, X.shape[0])
        if times is None:
            times = range(1, X.shape[0] + 1)
        instances = [
            LabeledInstance(int(t), FeatureVector(*map(int, row)), int(label))
            for t, row, label in zip(times, X, y)
        ]
        forest = train_forest(
            instances,
            num_trees=self.n_trees,
            impurity=self.impurity,
            fraction=self.sample_fraction,
            seed=self.random_state,
            with_replacement=self.with_replacement,
            vote_tie_break=self.vote_tie_break,
        )
        if self.filter_weak:
            forest = filter_weak_trees(forest)
        self.forest_ = forest
        self.n_trees_retained_ = len(forest.trees)
        self.classes_ = np.arange(1, 6)
        self._table_, self._votes_ = forest_decision_table(forest)
        return self

    def _check_fitted(self):
        if not hasattr(self, "forest_"):
            raise ValueError("estimator is not fitted; call fit first")

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_levels_array(X)
        idx = (X[:, 0] - 1) * 25 + (X[:, 1] - 1) * 5 + (X[:, 2] - 1)
        return self._table_[idx].astype(np.int64)

    def predict_votes(self, X) -> np.ndarray:
        """Per-sample vote histograms over the five levels, shape (n, 5)."""
        self._check_fitted()
        X = check_levels_array(X)
        idx = (X[:, 0] - 1) * 25 + (X[:, 1] - 1) * 5 + (X[:, 2] - 1)
        return self._votes_[idx].copy()


class FrameFeaturizer(TransformerMixin, BaseEstimator):
    """Turns observation frames into the (n, 3) category-level matrix.

    ``thresholds=None`` uses the default threshold table.  Stateless apart
    from its parameters, so ``fit`` only validates.
    """

    def __init__(self, thresholds: Optional[ThresholdTable] = None):
        self.thresholds = thresholds

    def _table(self) -> ThresholdTable:
        return self.thresholds if self.thresholds is not None else ThresholdTable.default()

    def fit(self, X=None, y=None):
        self._table()
        return self

    def transform(self, frames) -> np.ndarray:
        table = self._table()
        return np.array(
            [frame_features(frame, table) for frame in frames], dtype=np.int64
        )
