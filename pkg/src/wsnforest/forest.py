"""From-scratch random forest over categorical functioning levels.

Trees split 5-ways on one sensor category per node (so depth never exceeds
three), choosing at each node the not-yet-used category with the largest
information gain.  Impurity is Shannon entropy (base 2) or the Gini index.
A branch stops growing when its count tuple has at least four zero
components, when every category has been used, or when no remaining
category yields positive gain.

Split comparisons round gains to :data:`GAIN_DECIMALS` decimal places and
break ties by the canonical category order, so mathematically tied gains
cannot be reordered by floating-point noise.  Any reimplementation that
must reproduce tree shapes bit-for-bit has to share those two conventions.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from math import log2
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    ArtifactError,
    PartitionMismatchError,
    UndefinedImpurityError,
)
from .levels import LEVELS, FeatureVector, LabeledInstance
from .simulation import CATEGORY_ORDER, SensorCategory

NUM_LEVELS = 5

#: Gains are compared after rounding to this many decimals.
GAIN_DECIMALS = 12

#: Substream tag separating per-tree sampling streams from simulation streams.
_TREE_STREAM = 1

#: Forest files carry this version; loading any other version is an error.
FOREST_FORMAT_VERSION = 1


@dataclass(frozen=True)
class CountTuple:
    """Counts of instances per global level (index 0 holds level 1)."""

    counts: tuple[int, int, int, int, int]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != NUM_LEVELS:
            raise ValueError(f"expected {NUM_LEVELS} counts, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise ValueError(f"counts must be non-negative, got {counts}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_labels(cls, labels: Iterable[int]) -> "CountTuple":
        counts = [0] * NUM_LEVELS
        for label in labels:
            counts[label - 1] += 1
        return cls(tuple(counts))

    def total(self) -> int:
        return sum(self.counts)

    def nonzero_components(self) -> int:
        return sum(1 for c in self.counts if c > 0)

    def argmax_level(self, tie_break: str = "lowest") -> int:
        best = max(self.counts)
        tied = [level for level, c in zip(LEVELS, self.counts) if c == best]
        return tied[0] if tie_break == "lowest" else tied[-1]

    def __getitem__(self, index: int) -> int:
        return self.counts[index]

    def __add__(self, other: "CountTuple") -> "CountTuple":
        return CountTuple(tuple(a + b for a, b in zip(self.counts, other.counts)))


Counts = Union[CountTuple, Sequence[int]]


def _as_counts(counts: Counts) -> tuple[int, ...]:
    if isinstance(counts, CountTuple):
        return counts.counts
    return CountTuple(tuple(counts)).counts


def entropy(counts: Counts) -> float:
    """Shannon entropy (base 2) of the level proportions, in [0, log2 5]."""
    values = _as_counts(counts)
    total = sum(values)
    if total == 0:
        raise UndefinedImpurityError("entropy of an empty count tuple is undefined")
    return -sum((c / total) * log2(c / total) for c in values if c > 0)


def gini(counts: Counts) -> float:
    """Gini dispersion index of the level proportions, in [0, 0.8]."""
    values = _as_counts(counts)
    total = sum(values)
    if total == 0:
        raise UndefinedImpurityError("gini of an empty count tuple is undefined")
    return 1.0 - sum((c / total) ** 2 for c in values)


IMPURITY_FUNCTIONS: dict[str, Callable[[Counts], float]] = {
    "entropy": entropy,
    "gini": gini,
}


def _resolve_impurity(impurity) -> Callable[[Counts], float]:
    if callable(impurity):
        return impurity
    try:
        return IMPURITY_FUNCTIONS[impurity]
    except KeyError:
        raise ValueError(
            f"impurity must be one of {sorted(IMPURITY_FUNCTIONS)} or a callable, "
            f"got {impurity!r}") from None


def gain(parent: Counts, children: Sequence[Counts], impurity="entropy") -> float:
    """Information gain of partitioning ``parent`` into ``children``.

    Children must sum componentwise to the parent; empty children contribute
    nothing.  Concavity of both impurities makes the result non-negative up
    to rounding error.
    """
    parent_counts = _as_counts(parent)
    child_counts = [_as_counts(c) for c in children]
    sums = [sum(col) for col in zip(*child_counts)] if child_counts else [0] * NUM_LEVELS
    if sums != list(parent_counts):
        raise PartitionMismatchError(
            f"children sum to {tuple(sums)}, expected {parent_counts}")
    f = _resolve_impurity(impurity)
    total = sum(parent_counts)
    if total == 0:
        raise UndefinedImpurityError("gain over an empty parent is undefined")
    weighted = sum(
        (sum(c) / total) * f(c) for c in child_counts if sum(c) > 0
    )
    return f(parent_counts) - weighted


@dataclass(frozen=True)
class TreeNode:
    counts: CountTuple
    predicted_level: int
    split_category: Optional[SensorCategory] = None
    children: dict[int, "TreeNode"] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.split_category is None


@dataclass(frozen=True)
class Tree:
    root: TreeNode
    sample_times: tuple[int, ...]
    sample_indices: Optional[tuple[int, ...]] = None
    error: Optional[float] = None


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    impurity: str = "entropy"
    vote_tie_break: str = "highest"
    seed: Optional[int] = None
    training_instances: Optional[tuple[LabeledInstance, ...]] = None


def _sample_indices(
    n: int, fraction: float, rng: np.random.Generator, with_replacement: bool
) -> np.ndarray:
    if n < 1:
        raise ValueError("cannot sample from an empty instance list")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    size = max(1, round(fraction * n))
    return rng.choice(n, size=size, replace=with_replacement)


def bootstrap_dates(
    instances: Sequence[LabeledInstance],
    fraction: float = 0.67,
    rng: Optional[np.random.Generator] = None,
    with_replacement: bool = False,
) -> list[LabeledInstance]:
    """Extract a random sample of ``round(fraction * N)`` instances.

    Sampling is without replacement by default ("extract a subset of
    dates"); pass ``with_replacement=True`` for classic bagging.
    """
    if rng is None:
        rng = np.random.default_rng()
    indices = _sample_indices(len(instances), fraction, rng, with_replacement)
    return [instances[i] for i in indices]


def _category_index(category: SensorCategory) -> int:
    return CATEGORY_ORDER.index(category)


def grow_tree(
    sample: Sequence[LabeledInstance],
    impurity="entropy",
    leaf_tie_break: str = "lowest",
) -> Tree:
    """Grow one 5-way decision tree on a sample of labeled instances.

    Split selection is fully deterministic given the sample (best rounded
    gain, canonical category order on ties), so no randomness enters here;
    all forest randomness lives in the date sampling.
    """
    if not sample:
        raise ValueError("cannot grow a tree on an empty sample")
    features = np.array([inst.features for inst in sample], dtype=np.int8)
    labels = np.array([inst.global_level for inst in sample], dtype=np.int8)
    impurity_fn = _resolve_impurity(impurity)

    def build(rows: np.ndarray, available: tuple[SensorCategory, ...]) -> TreeNode:
        counts = CountTuple.from_labels(labels[rows])
        predicted = counts.argmax_level(leaf_tie_break)
        if counts.nonzero_components() <= 1 or not available:
            return TreeNode(counts, predicted)

        best_gain = None
        best_category = None
        best_groups = None
        for category in available:
            column = features[rows, _category_index(category)]
            groups = {
                int(level): rows[column == level]
                for level in np.unique(column)
            }
            child_counts = [CountTuple.from_labels(labels[g]) for g in groups.values()]
            g = round(gain(counts, child_counts, impurity_fn), GAIN_DECIMALS)
            if best_gain is None or g > best_gain:
                best_gain, best_category, best_groups = g, category, groups
        if best_gain <= 0.0:
            return TreeNode(counts, predicted)

        remaining = tuple(c for c in available if c is not best_category)
        children = {
            level: build(group_rows, remaining)
            for level, group_rows in best_groups.items()
        }
        return TreeNode(counts, predicted, best_category, children)

    root = build(np.arange(len(sample)), CATEGORY_ORDER)
    return Tree(root, sample_times=tuple(inst.time for inst in sample))


def train_forest(
    instances: Sequence[LabeledInstance],
    num_trees: int = 100,
    impurity: str = "entropy",
    fraction: float = 0.67,
    seed: int = 0,
    with_replacement: bool = False,
    leaf_tie_break: str = "lowest",
    vote_tie_break: str = "highest",
) -> Forest:
    """Train a forest of ``num_trees`` trees, one bootstrap sample each.

    Tree ``i`` draws its sample from a stream derived from ``(seed, i)``, so
    forests are reproducible and trees could be grown in parallel; the first
    ``k`` trees of a forest equal the forest trained with ``num_trees=k``.
    """
    if num_trees < 1:
        raise ValueError(f"num_trees must be >= 1, got {num_trees}")
    if not instances:
        raise ValueError("cannot train on an empty instance list")
    _resolve_impurity(impurity)
    trees = []
    for i in range(num_trees):
        rng = np.random.default_rng([seed, _TREE_STREAM, i])
        indices = _sample_indices(len(instances), fraction, rng, with_replacement)
        tree = grow_tree([instances[j] for j in indices], impurity, leaf_tie_break)
        trees.append(replace(tree, sample_indices=tuple(int(j) for j in indices)))
    return Forest(
        trees=tuple(trees),
        impurity=impurity,
        vote_tie_break=vote_tie_break,
        seed=seed,
        training_instances=tuple(instances),
    )


def tree_diagnose(tree: Union[Tree, TreeNode], features: Sequence[int]) -> int:
    """Walk a tree along the observation's levels and return its verdict.

    At each internal node the edge labeled with the observation's level for
    the split category is followed; if that level never occurred in training
    (no such child), the current node's majority level is returned.
    """
    node = tree.root if isinstance(tree, Tree) else tree
    while not node.is_leaf:
        level = int(features[_category_index(node.split_category)])
        child = node.children.get(level)
        if child is None:
            return node.predicted_level
        node = child
    return node.predicted_level


def forest_diagnose(
    forest: Forest, features: Sequence[int]
) -> tuple[int, tuple[int, int, int, int, int]]:
    """Majority consensus over all trees, with the vote histogram.

    Ties are broken toward the highest tied level (or lowest, per the
    forest's ``vote_tie_break`` policy).
    """
    if not forest.trees:
        raise ValueError("cannot diagnose with an empty forest")
    votes = [0] * NUM_LEVELS
    for tree in forest.trees:
        votes[tree_diagnose(tree, features) - 1] += 1
    return _vote_winner(votes, forest.vote_tie_break), tuple(votes)


def _vote_winner(votes: Sequence[int], tie_break: str) -> int:
    best = max(votes)
    tied = [level for level, v in zip(LEVELS, votes) if v == best]
    return tied[-1] if tie_break == "highest" else tied[0]


def filter_weak_trees(
    forest: Forest,
    eval_instances: Optional[Sequence[LabeledInstance]] = None,
    error_threshold: float = 0.5,
) -> Forest:
    """Drop every tree whose misclassification rate is not below 0.5.

    Each tree is evaluated on ``eval_instances`` when given, otherwise on
    its own out-of-sample dates (training instances outside its bootstrap
    sample).  A tree with no evaluation data is retained unrated.  If every
    tree would be dropped, the single best one is kept and a warning issued.
    """
    if eval_instances is not None and len(eval_instances) == 0:
        raise ValueError("eval_instances must be non-empty when provided")
    if eval_instances is None and forest.training_instances is None:
        raise ValueError(
            "forest carries no training instances; pass eval_instances explicitly")

    rated: list[Tree] = []
    for tree in forest.trees:
        if eval_instances is not None:
            eval_set = eval_instances
        else:
            in_sample = set(tree.sample_indices or ())
            eval_set = [
                inst for j, inst in enumerate(forest.training_instances)
                if j not in in_sample
            ]
        if not eval_set:
            rated.append(tree)
            continue
        wrong = sum(
            1 for inst in eval_set
            if tree_diagnose(tree, inst.features) != inst.global_level
        )
        rated.append(replace(tree, error=wrong / len(eval_set)))

    retained = [t for t in rated if t.error is None or t.error < error_threshold]
    if not retained:
        best = min(rated, key=lambda t: t.error)
        warnings.warn(
            "every tree had an error rate >= "
            f"{error_threshold}; retaining the single best tree "
            f"(error {best.error:.3f})",
            stacklevel=2,
        )
        retained = [best]
    return replace(forest, trees=tuple(retained))


def diversity_level(
    forest: Forest, eval_instances: Sequence[LabeledInstance]
) -> int:
    """Ensemble diversity grade 1 (best) to 4 (worst).

    1: at most one tree is wrong on every instance; 2: the majority vote is
    correct on every instance; 3: at least one tree is correct on every
    instance; 4: some instance defeats every tree.
    """
    if not forest.trees:
        raise ValueError("cannot grade an empty forest")
    if not eval_instances:
        raise ValueError("cannot grade diversity on an empty evaluation set")
    n_trees = len(forest.trees)
    max_wrong = 0
    vote_always_correct = True
    some_instance_defeats_all = False
    for inst in eval_instances:
        wrong = sum(
            1 for tree in forest.trees
            if tree_diagnose(tree, inst.features) != inst.global_level
        )
        max_wrong = max(max_wrong, wrong)
        if forest_diagnose(forest, inst.features)[0] != inst.global_level:
            vote_always_correct = False
        if wrong == n_trees:
            some_instance_defeats_all = True
    if max_wrong <= 1:
        return 1
    if vote_always_correct:
        return 2
    if not some_instance_defeats_all:
        return 3
    return 4


def all_feature_vectors() -> list[FeatureVector]:
    """Every possible feature vector, in index order (see feature_index)."""
    return [
        FeatureVector(t, p, h)
        for t in LEVELS for p in LEVELS for h in LEVELS
    ]


def feature_index(features: Sequence[int]) -> int:
    """Dense index 0..124 of a feature vector."""
    t, p, h = features
    return (t - 1) * 25 + (p - 1) * 5 + (h - 1)


def forest_decision_table(forest: Forest) -> tuple[np.ndarray, np.ndarray]:
    """Precomputed predictions and vote histograms over all 125 cells.

    Returns ``(predicted, votes)`` with shapes (125,) and (125, 5); batch
    prediction is then a table lookup on :func:`feature_index`.
    """
    cells = all_feature_vectors()
    votes = np.zeros((125, NUM_LEVELS), dtype=np.int32)
    for tree in forest.trees:
        for i, fv in enumerate(cells):
            votes[i, tree_diagnose(tree, fv) - 1] += 1
    predicted = np.array(
        [_vote_winner(row, forest.vote_tie_break) for row in votes],
        dtype=np.int8,
    )
    return predicted, votes


# --- persistence -----------------------------------------------------------

def _node_to_dict(node: TreeNode) -> dict:
    data: dict = {
        "counts": list(node.counts.counts),
        "predicted_level": node.predicted_level,
    }
    if not node.is_leaf:
        data["split_category"] = node.split_category.value
        data["children"] = {
            str(level): _node_to_dict(child)
            for level, child in sorted(node.children.items())
        }
    return data


def _node_from_dict(data: dict) -> TreeNode:
    try:
        counts = CountTuple(tuple(data["counts"]))
        predicted = int(data["predicted_level"])
        if "split_category" in data:
            category = SensorCategory(data["split_category"])
            children = {
                int(level): _node_from_dict(child)
                for level, child in data["children"].items()
            }
            return TreeNode(counts, predicted, category, children)
        return TreeNode(counts, predicted)
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"malformed tree node: {exc}") from exc


def forest_to_dict(forest: Forest) -> dict:
    return {
        "version": FOREST_FORMAT_VERSION,
        "impurity": forest.impurity,
        "seed": forest.seed,
        "vote_tie_break": forest.vote_tie_break,
        "trees": [
            {
                "sample_times": list(tree.sample_times),
                "error": tree.error,
                "root": _node_to_dict(tree.root),
            }
            for tree in forest.trees
        ],
    }


def forest_from_dict(data: dict) -> Forest:
    if not isinstance(data, dict) or "version" not in data:
        raise ArtifactError("forest document lacks a version field")
    if data["version"] != FOREST_FORMAT_VERSION:
        raise ArtifactError(
            f"unsupported forest format version {data['version']!r}; "
            f"expected {FOREST_FORMAT_VERSION}")
    try:
        trees = tuple(
            Tree(
                root=_node_from_dict(t["root"]),
                sample_times=tuple(int(v) for v in t["sample_times"]),
                error=None if t.get("error") is None else float(t["error"]),
            )
            for t in data["trees"]
        )
        impurity = data["impurity"]
        if impurity not in IMPURITY_FUNCTIONS:
            raise ArtifactError(f"unknown impurity {impurity!r}")
        return Forest(
            trees=trees,
            impurity=impurity,
            vote_tie_break=data.get("vote_tie_break", "highest"),
            seed=data.get("seed"),
        )
    except ArtifactError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"malformed forest document: {exc}") from exc


def save_forest(forest: Forest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_dict(forest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_forest(path) -> Forest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ArtifactError(f"forest file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"forest file is not valid JSON: {exc}") from exc
    return forest_from_dict(data)
