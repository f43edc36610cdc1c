"""Independent brute-force reference for tree induction and prediction.

Implemented from the impurity/gain definitions directly, with its own data
structures (plain dicts) and its own arithmetic, sharing only the declared
conventions of the algorithm: canonical category order on gain ties, gains
rounded to 12 decimals before comparison, stop on pure nodes / exhausted
categories / non-positive gain, majority leaves with lowest-level ties, and
missing-edge fallback to the current node's majority.
"""

import math

N_CLASSES = 5


def _proportions(labels):
    return [labels.count(k) / len(labels) for k in range(1, N_CLASSES + 1)]


def oracle_entropy(labels):
    return -sum(p * math.log(p, 2) for p in _proportions(labels) if p > 0)


def oracle_gini(labels):
    return 1 - sum(p * p for p in _proportions(labels))


def _impurity(labels, kind):
    return oracle_entropy(labels) if kind == "entropy" else oracle_gini(labels)


def _majority(labels):
    counts = [labels.count(k) for k in range(1, N_CLASSES + 1)]
    best = max(counts)
    for level, count in zip(range(1, N_CLASSES + 1), counts):
        if count == best:
            return level


def oracle_grow(rows, impurity="entropy"):
    """Grow a reference tree from (features, label) pairs.

    ``rows`` is a list of ((t_level, p_level, h_level), label).  Returns a
    nested dict: leaves are {"predict": level}; internal nodes add
    {"split": feature_position, "children": {level: node}}.
    """

    def build(rows, remaining):
        labels = [label for _, label in rows]
        node = {"predict": _majority(labels)}
        if len(set(labels)) <= 1 or not remaining:
            return node

        base = _impurity(labels, impurity)
        best = None
        for position in remaining:
            groups = {}
            for features, label in rows:
                groups.setdefault(features[position], []).append((features, label))
            weighted = 0.0
            for sub in groups.values():
                sub_labels = [label for _, label in sub]
                weighted += len(sub) / len(rows) * _impurity(sub_labels, impurity)
            gain = round(base - weighted, 12)
            if best is None or gain > best[0]:
                best = (gain, position, groups)

        gain, position, groups = best
        if gain <= 0:
            return node
        node["split"] = position
        node["children"] = {
            level: build(sub, [p for p in remaining if p != position])
            for level, sub in groups.items()
        }
        return node

    return build(list(rows), [0, 1, 2])


def oracle_predict(node, features):
    while "split" in node:
        child = node["children"].get(features[node["split"]])
        if child is None:
            return node["predict"]
        node = child
    return node["predict"]
