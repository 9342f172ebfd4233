"""Versioned JSON serialization of fitted models.

Document layout::

    {
      "format_version": 1,
      "model_kind": "tree" | "forest",
      "n_features": 3,
      "feature_names": ["age", "income", "dti"],
      "trees": [
        {
          "children_left": [1, -1, -1],
          "children_right": [2, -1, -1],
          "feature": [0, -1, -1],
          "threshold": [2.5, 0.0, 0.0],
          "value": [[10, 6], [9, 1], [1, 5]],
          "n_node_samples": [16, 10, 6]
        }
      ]
    }

``value`` holds integer class counts, which is the canonical probability
representation: probabilities, impurities and importances are recomputed
from counts on import.  Node 0 is the root; -1 marks a missing child; a
node has either two children or none.  Leaf rows carry feature -1 and
threshold 0.0 (foreign conventions such as -2 are normalized on import).
"""

from __future__ import annotations

import json

import numpy as np

from ._io import atomic_write_text
from .forest import ForestClassifier
from .tree import LEAF, CartClassifier, Tree, gini

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """A model document is malformed or structurally invalid."""


def _tree_record(tree: Tree) -> dict:
    leaf = tree.leaf_mask
    feature = np.where(leaf, LEAF, tree.feature)
    threshold = np.where(leaf, 0.0, tree.threshold)
    return {
        "children_left": [int(v) for v in tree.children_left],
        "children_right": [int(v) for v in tree.children_right],
        "feature": [int(v) for v in feature],
        "threshold": [float(v) for v in threshold],
        "value": [[int(a), int(b)] for a, b in tree.class_counts],
        "n_node_samples": [int(v) for v in tree.n_node_samples],
    }


def model_to_document(model) -> dict:
    """Serialize a fitted classifier to a plain dict."""
    if isinstance(model, ForestClassifier):
        trees = model.trees_
        kind = "forest"
    elif isinstance(model, CartClassifier):
        trees = [model.tree_]
        kind = "tree"
    else:
        raise TypeError(
            f"expected CartClassifier or ForestClassifier, got {type(model).__name__}"
        )
    n_features = trees[0].n_features
    names = getattr(model, "feature_names_in_", None)
    if names is None:
        names = [f"f{i}" for i in range(n_features)]
    names = [str(n) for n in names]
    if len(names) != n_features:
        raise ValueError(f"got {len(names)} feature names for {n_features} features")
    return {
        "format_version": FORMAT_VERSION,
        "model_kind": kind,
        "n_features": n_features,
        "feature_names": names,
        "trees": [_tree_record(tree) for tree in trees],
    }


def export_model_json(model, path) -> None:
    atomic_write_text(path, json.dumps(model_to_document(model), indent=2) + "\n")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ModelFormatError(message)


def _as_int(value, context: str) -> int:
    # bool is an int subclass but not a node id
    _require(isinstance(value, int) and not isinstance(value, bool), f"{context}: expected an integer")
    return value


def _tree_from_record(record, tree_index: int, n_features: int) -> Tree:
    where = f"tree {tree_index}"
    _require(isinstance(record, dict), f"{where}: record must be an object")
    keys = ("children_left", "children_right", "feature", "threshold", "value", "n_node_samples")
    for key in keys:
        _require(key in record, f"{where}: missing field {key!r}")
        _require(isinstance(record[key], list), f"{where}: field {key!r} must be a list")
    n_nodes = len(record["children_left"])
    _require(n_nodes >= 1, f"{where}: needs at least one node")
    for key in keys:
        _require(
            len(record[key]) == n_nodes,
            f"{where}: field {key!r} has length {len(record[key])}, expected {n_nodes}",
        )

    children_left = np.empty(n_nodes, dtype=np.int64)
    children_right = np.empty(n_nodes, dtype=np.int64)
    feature = np.empty(n_nodes, dtype=np.int64)
    threshold = np.empty(n_nodes, dtype=np.float64)
    counts = np.empty((n_nodes, 2), dtype=np.int64)

    referenced: dict[int, int] = {}
    for node in range(n_nodes):
        at = f"{where}, node {node}"
        left = _as_int(record["children_left"][node], f"{at}: children_left")
        right = _as_int(record["children_right"][node], f"{at}: children_right")
        for child in (left, right):
            _require(
                child == LEAF or 0 <= child < n_nodes,
                f"{at}: child index {child} out of range",
            )
            _require(child != node, f"{at}: node is its own child")
        _require(
            (left == LEAF) == (right == LEAF),
            f"{at}: a node must have both children or neither",
        )
        if left != LEAF:
            _require(left != right, f"{at}: identical children")
            for child in (left, right):
                _require(
                    child not in referenced,
                    f"{where}, node {child}: referenced by more than one parent",
                )
                _require(child != 0, f"{at}: the root cannot be a child")
                referenced[child] = node

        row = record["value"][node]
        _require(
            isinstance(row, list) and len(row) == 2,
            f"{at}: value row must be a two-element list",
        )
        c0 = _as_int(row[0], f"{at}: value[0]")
        c1 = _as_int(row[1], f"{at}: value[1]")
        _require(c0 >= 0 and c1 >= 0, f"{at}: class counts must be non-negative")
        declared = _as_int(record["n_node_samples"][node], f"{at}: n_node_samples")
        _require(
            declared == c0 + c1,
            f"{at}: n_node_samples {declared} does not match counts sum {c0 + c1}",
        )

        raw_feature = _as_int(record["feature"][node], f"{at}: feature")
        raw_threshold = record["threshold"][node]
        _require(
            isinstance(raw_threshold, (int, float)) and not isinstance(raw_threshold, bool),
            f"{at}: threshold must be a number",
        )
        raw_threshold = float(raw_threshold)
        if left == LEAF:
            # normalize foreign leaf markers (e.g. -2) to the canonical pair
            feature[node] = LEAF
            threshold[node] = 0.0
            _require(c0 + c1 > 0, f"{at}: a leaf must hold at least one sample")
        else:
            _require(
                0 <= raw_feature < n_features,
                f"{at}: feature index {raw_feature} out of range",
            )
            _require(np.isfinite(raw_threshold), f"{at}: threshold must be finite")
            feature[node] = raw_feature
            threshold[node] = raw_threshold

        children_left[node] = left
        children_right[node] = right
        counts[node] = (c0, c1)

    # every non-root node must be referenced exactly once and reachable
    for node in range(1, n_nodes):
        _require(
            node in referenced,
            f"{where}, node {node}: unreachable (no parent references it)",
        )

    # counts are canonical, so an internal node must hold its children's sum;
    # with positive leaf counts this also makes every total positive
    for node in range(n_nodes):
        left = children_left[node]
        if left != LEAF:
            right = children_right[node]
            _require(
                bool((counts[node] == counts[left] + counts[right]).all()),
                f"{where}, node {node}: children counts do not sum to the node's",
            )

    totals = counts.sum(axis=1)
    impurity = np.array([gini(c) for c in counts])
    probabilities = counts / totals[:, None]
    return Tree(
        children_left=children_left,
        children_right=children_right,
        feature=feature,
        threshold=threshold,
        class_counts=counts,
        n_node_samples=totals,
        impurity=impurity,
        probabilities=probabilities,
        n_features=n_features,
    )


def model_from_document(document) -> CartClassifier | ForestClassifier:
    """Validate a document and rebuild a ready-to-predict classifier.

    The returned estimator carries ``tree_``/``trees_``, ``classes_``,
    ``n_features_in_`` and ``feature_names_in_``; the original training
    hyperparameters are not part of the format.
    """
    _require(isinstance(document, dict), "document must be a JSON object")
    version = document.get("format_version")
    _require(
        version == FORMAT_VERSION,
        f"unsupported format_version {version!r}, expected {FORMAT_VERSION}",
    )
    kind = document.get("model_kind")
    _require(kind in ("tree", "forest"), f"model_kind must be tree or forest, got {kind!r}")
    n_features = document.get("n_features")
    _require(
        isinstance(n_features, int) and not isinstance(n_features, bool) and n_features >= 1,
        "n_features must be a positive integer",
    )
    names = document.get("feature_names")
    _require(
        isinstance(names, list) and all(isinstance(n, str) for n in names),
        "feature_names must be a list of strings",
    )
    _require(
        len(names) == n_features,
        f"feature_names has {len(names)} entries for n_features={n_features}",
    )
    records = document.get("trees")
    _require(isinstance(records, list) and records, "trees must be a non-empty list")
    if kind == "tree":
        _require(len(records) == 1, "model_kind tree requires exactly one tree")
    trees = [
        _tree_from_record(record, index, n_features)
        for index, record in enumerate(records)
    ]
    if kind == "tree":
        model = CartClassifier()
        model.tree_ = trees[0]
    else:
        model = ForestClassifier(n_estimators=len(trees))
        model.trees_ = trees
    model.n_features_in_ = n_features
    model.classes_ = np.array([0, 1])
    model.feature_names_in_ = tuple(names)
    return model


def import_model_json(path):
    with open(path, encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    return model_from_document(document)
