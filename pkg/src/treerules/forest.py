"""Bagged ensembles of CART trees with probability averaging."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ._validation import check_binary_targets, check_feature_matrix, check_is_fitted
from .tree import Tree, grow_tree, predict_proba_tree, tree_feature_importances


def derive_tree_seeds(master_seed: int, tree_index: int) -> tuple[int, int]:
    """Per-tree (bootstrap_seed, grow_seed) derived from the master seed.

    Uses SeedSequence spawn keys, so each tree's streams are independent and
    reproducible from (master_seed, tree_index) alone.
    """
    sequence = np.random.SeedSequence(master_seed, spawn_key=(tree_index,))
    bootstrap_seed, grow_seed = sequence.generate_state(2, dtype=np.uint64)
    return int(bootstrap_seed), int(grow_seed)


def bootstrap_rows(n_samples: int, seed: int) -> np.ndarray:
    """n_samples draws with replacement from range(n_samples)."""
    return np.random.default_rng(seed).integers(0, n_samples, size=n_samples)


def fit_forest(
    X,
    y,
    *,
    n_estimators: int = 5,
    max_depth: int | None = None,
    max_features: int | None = None,
    max_leaf_nodes: int | None = None,
    min_samples_split: int = 2,
    bootstrap: bool = True,
    seed: int = 0,
) -> list[Tree]:
    """Grow ``n_estimators`` trees, each on its own bootstrap resample.

    With ``bootstrap=False`` every tree sees the full dataset and trees
    differ only through their derived grow seeds (so with no feature
    subsampling they are identical).
    """
    X = check_feature_matrix(X)
    y = check_binary_targets(y, X.shape[0])
    if X.shape[0] == 0:
        raise ValueError("cannot fit a forest on an empty dataset")
    if int(n_estimators) != n_estimators or n_estimators < 1:
        raise ValueError(f"n_estimators must be an integer >= 1, got {n_estimators!r}")
    trees = []
    for t in range(n_estimators):
        bootstrap_seed, grow_seed = derive_tree_seeds(seed, t)
        if bootstrap:
            rows = bootstrap_rows(X.shape[0], bootstrap_seed)
            X_t, y_t = X[rows], y[rows]
        else:
            X_t, y_t = X, y
        trees.append(
            grow_tree(
                X_t,
                y_t,
                max_depth=max_depth,
                max_features=max_features,
                max_leaf_nodes=max_leaf_nodes,
                min_samples_split=min_samples_split,
                seed=grow_seed,
            )
        )
    return trees


def predict_proba_forest(trees: list[Tree], X) -> np.ndarray:
    """Average of per-tree leaf probabilities, accumulated in tree order."""
    if not trees:
        raise ValueError("forest has no trees")
    X = check_feature_matrix(X, trees[0].n_features)
    accumulated = np.zeros((X.shape[0], 2))
    for tree in trees:
        accumulated += predict_proba_tree(tree, X)
    accumulated /= len(trees)
    return accumulated


def forest_feature_importances(trees: list[Tree]) -> np.ndarray:
    """Mean of per-tree normalized importances, renormalized to sum 1."""
    if not trees:
        raise ValueError("forest has no trees")
    accumulated = np.zeros(trees[0].n_features)
    for tree in trees:
        accumulated += tree_feature_importances(tree)
    accumulated /= len(trees)
    total = accumulated.sum()
    if total > 0.0:
        accumulated /= total
    return accumulated


class ForestClassifier(ClassifierMixin, BaseEstimator):
    """Bagged binary random forest over numeric features.

    After ``fit`` the grown arenas are available as ``trees_`` in training
    order; predictions average the per-tree leaf probabilities.
    """

    def __init__(
        self,
        n_estimators: int = 5,
        max_depth: int | None = None,
        max_features: int | None = None,
        max_leaf_nodes: int | None = None,
        min_samples_split: int = 2,
        bootstrap: bool = True,
        seed: int = 0,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_features = max_features
        self.max_leaf_nodes = max_leaf_nodes
        self.min_samples_split = min_samples_split
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_binary_targets(y, X.shape[0])
        self.trees_ = fit_forest(
            X,
            y,
            n_estimators=self.n_estimators,
            max_depth=self.max_depth,
            max_features=self.max_features,
            max_leaf_nodes=self.max_leaf_nodes,
            min_samples_split=self.min_samples_split,
            bootstrap=self.bootstrap,
            seed=self.seed,
        )
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "trees_")
        X = check_feature_matrix(X, self.n_features_in_)
        return predict_proba_forest(self.trees_, X)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    @property
    def feature_importances_(self) -> np.ndarray:
        check_is_fitted(self, "trees_")
        return forest_feature_importances(self.trees_)
