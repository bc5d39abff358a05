# learners/decision_tree.py
# CART classification tree with Gini impurity and axis-aligned midpoint splits

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config.config import LearnerFamilies
from learners.learner_base import LearnerBase

_LEAF = -1
_TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TreeStructure:
    """Flat node arrays; internal nodes send x[feature] <= threshold left"""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int


def _gini_from_counts(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    proportions = counts / totals[:, None]
    return 1.0 - np.sum(proportions * proportions, axis=1)


def _best_split(features: np.ndarray, labels: np.ndarray, class_count: int) -> Optional[Tuple[int, float]]:
    """
    Lowest weighted Gini over all features and midpoints.
    Ties resolve to the lowest feature index, then the lowest threshold.
    """
    n = labels.shape[0]
    one_hot = np.eye(class_count)[labels]
    totals = one_hot.sum(axis=0)
    best: Optional[Tuple[int, float]] = None
    best_score = np.inf

    for j in range(features.shape[1]):
        order = np.argsort(features[:, j], kind='stable')
        xs = features[order, j]
        candidates = np.flatnonzero(xs[:-1] < xs[1:])
        if candidates.size == 0:
            continue
        left_counts = np.cumsum(one_hot[order], axis=0)[candidates]
        right_counts = totals - left_counts
        n_left = (candidates + 1).astype(float)
        n_right = n - n_left
        weighted = (n_left * _gini_from_counts(left_counts, n_left)
                    + n_right * _gini_from_counts(right_counts, n_right)) / n
        pick = int(np.argmin(weighted))
        if weighted[pick] < best_score - _TIE_TOLERANCE:
            i = candidates[pick]
            threshold = (xs[i] + xs[i + 1]) / 2.0
            if threshold >= xs[i + 1]:
                threshold = xs[i]
            best, best_score = (j, float(threshold)), float(weighted[pick])
    return best


class DecisionTreeLearner(LearnerBase):
    """
    Greedy CART tree. max_depth=None grows until every leaf is pure or holds
    identical feature rows, so distinct training points are memorised.
    """

    family = LearnerFamilies.DECISION_TREE
    defaults = {'max_depth': None}

    @classmethod
    def validate(cls, hyperparams):
        cls._check_int(hyperparams, 'max_depth', 1, allow_none=True)

    def fit(self, features, labels, class_count):
        max_depth = self.hyperparams['max_depth']
        feature: List[int] = []
        threshold: List[float] = []
        left: List[int] = []
        right: List[int] = []
        value: List[int] = []
        deepest = 0

        def new_node(rows: np.ndarray) -> int:
            feature.append(_LEAF)
            threshold.append(0.0)
            left.append(_LEAF)
            right.append(_LEAF)
            value.append(int(np.argmax(np.bincount(labels[rows], minlength=class_count))))
            return len(feature) - 1

        stack = [(new_node(np.arange(labels.shape[0])), np.arange(labels.shape[0]), 0)]
        while stack:
            node, rows, depth = stack.pop()
            deepest = max(deepest, depth)
            node_labels = labels[rows]
            if np.all(node_labels == node_labels[0]):
                continue
            if max_depth is not None and depth >= max_depth:
                continue
            split = _best_split(features[rows], node_labels, class_count)
            if split is None:
                continue
            j, thr = split
            goes_left = features[rows, j] <= thr
            left_rows, right_rows = rows[goes_left], rows[~goes_left]
            feature[node], threshold[node] = j, thr
            left[node] = new_node(left_rows)
            right[node] = new_node(right_rows)
            stack.append((right[node], right_rows, depth + 1))
            stack.append((left[node], left_rows, depth + 1))

        return TreeStructure(
            feature=np.asarray(feature, dtype=np.int64),
            threshold=np.asarray(threshold, dtype=float),
            left=np.asarray(left, dtype=np.int64),
            right=np.asarray(right, dtype=np.int64),
            value=np.asarray(value, dtype=np.int64),
            depth=deepest,
        )

    def decide(self, parameters: TreeStructure, features):
        nodes = np.zeros(features.shape[0], dtype=np.int64)
        active = parameters.feature[nodes] != _LEAF
        while np.any(active):
            rows = np.flatnonzero(active)
            current = nodes[rows]
            go_left = features[rows, parameters.feature[current]] <= parameters.threshold[current]
            nodes[rows] = np.where(go_left, parameters.left[current], parameters.right[current])
            active[rows] = parameters.feature[nodes[rows]] != _LEAF
        return parameters.value[nodes]
