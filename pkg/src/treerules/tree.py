"""Binary CART on a flat node arena: Gini splits, depth/leaf caps, subsampling.

A decision routes a sample left iff ``value <= threshold``.  Thresholds are
midpoints between consecutive distinct sorted feature values.  Growth is
depth-first (left child before right) unless ``max_leaf_nodes`` is set, in
which case the frontier node with the largest impurity decrease is expanded
first.  Both strategies are iterative, so depth is bounded by data, not by
the interpreter's recursion limit.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ._validation import (
    check_binary_targets,
    check_feature_matrix,
    check_is_fitted,
)

LEAF = -1


def gini(class_counts) -> float:
    """Gini impurity of a two-class count pair."""
    c0, c1 = class_counts
    c0, c1 = int(c0), int(c1)
    if c0 < 0 or c1 < 0:
        raise ValueError("class counts must be non-negative")
    total = c0 + c1
    if total == 0:
        raise ValueError("gini is undefined for an empty node")
    p0 = c0 / total
    p1 = c1 / total
    return 1.0 - p0 * p0 - p1 * p1


def best_split(X, y, rows, feature_indices):
    """Pick the split with the largest weighted Gini decrease.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values of each candidate feature.  Ties go to the lowest feature index,
    then the lowest threshold.  Returns ``(feature_index, threshold,
    impurity_decrease)`` or None when no candidate strictly reduces the
    weighted child impurity below the parent's.
    """
    rows = np.asarray(rows)
    y_rows = y[rows]
    n = rows.size
    if n < 2:
        return None
    total1 = int(y_rows.sum())
    total0 = n - total1
    parent = gini((total0, total1))
    best = None  # (decrease, feature, threshold)
    for f in np.sort(np.asarray(feature_indices)):
        values = X[rows, f]
        order = np.argsort(values)
        vs = values[order]
        ys = y_rows[order]
        boundaries = np.nonzero(vs[1:] != vs[:-1])[0]
        if boundaries.size == 0:
            continue
        cum1 = np.cumsum(ys)
        n_left = boundaries + 1
        c1_left = cum1[boundaries]
        c0_left = n_left - c1_left
        n_right = n - n_left
        c1_right = total1 - c1_left
        c0_right = n_right - c1_right
        pl0 = c0_left / n_left
        pl1 = c1_left / n_left
        pr0 = c0_right / n_right
        pr1 = c1_right / n_right
        gini_left = 1.0 - pl0 * pl0 - pl1 * pl1
        gini_right = 1.0 - pr0 * pr0 - pr1 * pr1
        decrease = parent - (n_left / n) * gini_left - (n_right / n) * gini_right
        mids = (vs[boundaries] + vs[boundaries + 1]) / 2.0
        # a midpoint that rounds up to the right-hand value would leak that
        # value into the left branch; fall back to the left-hand value
        mids = np.where(mids < vs[boundaries + 1], mids, vs[boundaries])
        k = int(np.argmax(decrease))  # first max, so lowest threshold wins ties
        if decrease[k] > 0.0 and (best is None or decrease[k] > best[0]):
            best = (float(decrease[k]), int(f), float(mids[k]))
    if best is None:
        return None
    return best[1], best[2], best[0]


@dataclass
class Tree:
    """Flattened binary tree: parallel per-node arrays, -1 marks a leaf child.

    ``class_counts[i]`` holds the training class-0/class-1 counts at node i;
    ``probabilities[i]`` is that row divided by its sum.  Node 0 is the root
    and node ids follow creation order.
    """

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    class_counts: np.ndarray
    n_node_samples: np.ndarray
    impurity: np.ndarray
    probabilities: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return self.children_left.shape[0]

    @property
    def leaf_mask(self) -> np.ndarray:
        return self.children_left == LEAF

    @property
    def n_leaves(self) -> int:
        return int(self.leaf_mask.sum())

    def node_depths(self) -> np.ndarray:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            left = self.children_left[node]
            if left != LEAF:
                depths[left] = depths[node] + 1
                depths[self.children_right[node]] = depths[node] + 1
        return depths

    def max_depth(self) -> int:
        return int(self.node_depths().max())


class _TreeBuilder:
    """Accumulates node rows and finalizes them into a Tree."""

    def __init__(self, n_features: int):
        self.n_features = n_features
        self.children_left: list[int] = []
        self.children_right: list[int] = []
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.class_counts: list[tuple[int, int]] = []
        self.impurity: list[float] = []

    def add_leaf(self, parent: int | None, is_left: bool, counts: tuple[int, int]) -> int:
        node = len(self.children_left)
        self.children_left.append(LEAF)
        self.children_right.append(LEAF)
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.class_counts.append(counts)
        self.impurity.append(gini(counts))
        if parent is not None:
            if is_left:
                self.children_left[parent] = node
            else:
                self.children_right[parent] = node
        return node

    def make_internal(self, node: int, feature: int, threshold: float) -> None:
        self.feature[node] = feature
        self.threshold[node] = threshold

    def finalize(self) -> Tree:
        counts = np.asarray(self.class_counts, dtype=np.int64)
        totals = counts.sum(axis=1)
        return Tree(
            children_left=np.asarray(self.children_left, dtype=np.int64),
            children_right=np.asarray(self.children_right, dtype=np.int64),
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            class_counts=counts,
            n_node_samples=totals,
            impurity=np.asarray(self.impurity, dtype=np.float64),
            probabilities=counts / totals[:, None],
            n_features=self.n_features,
        )


def _check_grow_params(max_depth, max_features, max_leaf_nodes, min_samples_split):
    for name, value, low in (
        ("max_depth", max_depth, 1),
        ("max_features", max_features, 1),
        ("max_leaf_nodes", max_leaf_nodes, 1),
        ("min_samples_split", min_samples_split, 2),
    ):
        if value is None:
            continue
        if int(value) != value or value < low:
            raise ValueError(f"{name} must be an integer >= {low}, got {value!r}")


def grow_tree(
    X,
    y,
    *,
    max_depth: int | None = None,
    max_features: int | None = None,
    max_leaf_nodes: int | None = None,
    min_samples_split: int = 2,
    seed: int = 0,
) -> Tree:
    """Grow a CART tree and return its arena.

    ``max_features`` caps how many features each split considers, drawn
    without replacement per node from the seeded generator; values at or
    above the feature count disable subsampling (and the generator is never
    consulted).  Draws happen in node-creation order, so the same seed and
    data always give the same tree.
    """
    X = check_feature_matrix(X)
    y = check_binary_targets(y, X.shape[0])
    if X.shape[0] == 0:
        raise ValueError("cannot grow a tree on an empty dataset")
    _check_grow_params(max_depth, max_features, max_leaf_nodes, min_samples_split)
    n_samples, n_features = X.shape
    subsample = max_features is not None and max_features < n_features
    rng = np.random.default_rng(seed) if subsample else None
    all_features = np.arange(n_features)

    def draw_candidates() -> np.ndarray:
        if not subsample:
            return all_features
        chosen = rng.choice(n_features, size=max_features, replace=False)
        chosen.sort()
        return chosen

    builder = _TreeBuilder(n_features)
    all_rows = np.arange(n_samples)

    def counts_of(rows) -> tuple[int, int]:
        ones = int(y[rows].sum())
        return (rows.size - ones, ones)

    def eligible(rows, depth, counts) -> bool:
        if max_depth is not None and depth >= max_depth:
            return False
        if rows.size < min_samples_split:
            return False
        return counts[0] != 0 and counts[1] != 0

    def partition(rows, feature, threshold):
        mask = X[rows, feature] <= threshold
        return rows[mask], rows[~mask]

    if max_leaf_nodes is None:
        # depth-first, left child expanded before right
        stack = [(None, False, all_rows, 0)]
        while stack:
            parent, is_left, rows, depth = stack.pop()
            counts = counts_of(rows)
            node = builder.add_leaf(parent, is_left, counts)
            split = (
                best_split(X, y, rows, draw_candidates())
                if eligible(rows, depth, counts)
                else None
            )
            if split is None:
                continue
            feature, threshold, _ = split
            builder.make_internal(node, feature, threshold)
            left_rows, right_rows = partition(rows, feature, threshold)
            stack.append((node, False, right_rows, depth + 1))
            stack.append((node, True, left_rows, depth + 1))
    else:
        # best-first: expand the frontier leaf with the largest decrease,
        # ties to the oldest node
        frontier: list[tuple[float, int]] = []
        pending: dict[int, tuple[tuple[int, float, float], np.ndarray, int]] = {}

        def open_node(parent, is_left, rows, depth) -> None:
            counts = counts_of(rows)
            node = builder.add_leaf(parent, is_left, counts)
            split = (
                best_split(X, y, rows, draw_candidates())
                if eligible(rows, depth, counts)
                else None
            )
            if split is not None:
                pending[node] = (split, rows, depth)
                heapq.heappush(frontier, (-split[2], node))

        open_node(None, False, all_rows, 0)
        n_leaves = 1
        while frontier and n_leaves < max_leaf_nodes:
            _, node = heapq.heappop(frontier)
            (feature, threshold, _), rows, depth = pending.pop(node)
            builder.make_internal(node, feature, threshold)
            left_rows, right_rows = partition(rows, feature, threshold)
            open_node(node, True, left_rows, depth + 1)
            open_node(node, False, right_rows, depth + 1)
            n_leaves += 1

    return builder.finalize()


def tree_apply(tree: Tree, X) -> np.ndarray:
    """Leaf id reached by each row of X, by iterative level descent."""
    X = check_feature_matrix(X, tree.n_features)
    position = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        at_internal = np.nonzero(tree.feature[position] >= 0)[0]
        if at_internal.size == 0:
            return position
        nodes = position[at_internal]
        go_left = X[at_internal, tree.feature[nodes]] <= tree.threshold[nodes]
        position[at_internal] = np.where(
            go_left, tree.children_left[nodes], tree.children_right[nodes]
        )


def predict_proba_tree(tree: Tree, X) -> np.ndarray:
    """Leaf class probabilities for each row of X, shape (n, 2)."""
    return tree.probabilities[tree_apply(tree, X)]


def tree_feature_importances(tree: Tree) -> np.ndarray:
    """Mean decrease in impurity per feature, normalized to sum 1.

    Each internal node contributes (its sample share of the root) times the
    impurity decrease its split achieved; computable for any arena with
    class counts, including imported models.
    """
    importances = np.zeros(tree.n_features)
    n_root = int(tree.n_node_samples[0])
    for node in range(tree.n_nodes):
        feature = int(tree.feature[node])
        if feature < 0:
            continue
        left = tree.children_left[node]
        right = tree.children_right[node]
        n_node = int(tree.n_node_samples[node])
        n_left = int(tree.n_node_samples[left])
        n_right = int(tree.n_node_samples[right])
        decrease = (
            tree.impurity[node]
            - (n_left / n_node) * tree.impurity[left]
            - (n_right / n_node) * tree.impurity[right]
        )
        importances[feature] += (n_node / n_root) * decrease
    total = importances.sum()
    if total > 0.0:
        importances /= total
    return importances


class CartClassifier(ClassifierMixin, BaseEstimator):
    """Binary CART classifier over numeric features.

    Parameters mirror :func:`grow_tree`.  After ``fit`` the grown arena is
    available as ``tree_``.
    """

    def __init__(
        self,
        max_depth: int | None = None,
        max_features: int | None = None,
        max_leaf_nodes: int | None = None,
        min_samples_split: int = 2,
        seed: int = 0,
    ):
        self.max_depth = max_depth
        self.max_features = max_features
        self.max_leaf_nodes = max_leaf_nodes
        self.min_samples_split = min_samples_split
        self.seed = seed

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_binary_targets(y, X.shape[0])
        self.tree_ = grow_tree(
            X,
            y,
            max_depth=self.max_depth,
            max_features=self.max_features,
            max_leaf_nodes=self.max_leaf_nodes,
            min_samples_split=self.min_samples_split,
            seed=self.seed,
        )
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "tree_")
        X = check_feature_matrix(X, self.n_features_in_)
        return predict_proba_tree(self.tree_, X)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    @property
    def feature_importances_(self) -> np.ndarray:
        check_is_fitted(self, "tree_")
        return tree_feature_importances(self.tree_)
