"""Convert fitted scikit-learn tree models to the treerules JSON format.

The target format (format_version 1) stores flattened node arrays per
tree with integer class counts as the canonical payload; see the
treerules README for the full layout.  Two scikit-learn quirks are
handled here:

* recent versions store ``tree_.value`` as per-node class *fractions*,
  so counts are recovered as fraction x weighted_n_node_samples and
  rounded (older versions storing raw counts are detected by row sums);
* in bootstrap forests ``tree_.n_node_samples`` counts rows including
  out-of-bag ones, which is not the in-bag count the fractions refer
  to, so the emitted n_node_samples is always the recovered counts sum.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.exceptions import NotFittedError
from sklearn.tree import DecisionTreeClassifier

FORMAT_VERSION = 1

LEAF = -1


class ExportError(ValueError):
    """The model cannot be represented in the interchange format."""


def _recover_counts(tree) -> np.ndarray:
    value = tree.value[:, 0, :]
    weighted = np.asarray(tree.weighted_n_node_samples, dtype=np.float64)
    if np.allclose(value.sum(axis=1), 1.0):
        counts = value * weighted[:, None]
    else:
        # older layout: value already holds (weighted) counts
        counts = np.array(value, dtype=np.float64)
    rounded = np.rint(counts)
    if np.abs(counts - rounded).max() > 1e-6:
        raise ExportError(
            "class counts are not integral; models fit with fractional "
            "sample weights cannot be exported"
        )
    return rounded.astype(np.int64)


def _tree_record(tree) -> dict:
    counts = _recover_counts(tree)
    leaf = tree.children_left == LEAF
    if np.any(leaf & (counts.sum(axis=1) == 0)):
        raise ExportError(
            "tree has a leaf holding no weighted samples; its predicted "
            "probabilities are undefined and cannot be exported"
        )
    feature = np.where(leaf, LEAF, tree.feature)
    threshold = np.where(leaf, 0.0, tree.threshold)
    return {
        "children_left": [int(v) for v in tree.children_left],
        "children_right": [int(v) for v in tree.children_right],
        "feature": [int(v) for v in feature],
        "threshold": [float(v) for v in threshold],
        "value": [[int(a), int(b)] for a, b in counts],
        "n_node_samples": [int(a + b) for a, b in counts],
    }


def _check_fitted(model, attribute: str) -> None:
    if not hasattr(model, attribute):
        raise NotFittedError(
            f"{type(model).__name__} is not fitted; call fit before exporting"
        )


def model_to_document(model, feature_names) -> dict:
    """Build an interchange document from a fitted sklearn classifier."""
    if isinstance(model, RandomForestClassifier):
        _check_fitted(model, "estimators_")
        trees = [est.tree_ for est in model.estimators_]
        kind = "forest"
    elif isinstance(model, DecisionTreeClassifier):
        _check_fitted(model, "tree_")
        trees = [model.tree_]
        kind = "tree"
    else:
        raise ExportError(
            f"unsupported model type {type(model).__name__}; expected "
            "DecisionTreeClassifier or RandomForestClassifier"
        )
    classes = list(getattr(model, "classes_", []))
    if len(classes) != 2:
        raise ExportError(f"expected a binary classifier, got {len(classes)} classes")
    if classes != [0, 1]:
        raise ExportError(f"class labels must be 0 and 1, got {classes}")
    n_features = int(model.n_features_in_)
    feature_names = [str(name) for name in feature_names]
    if len(feature_names) != n_features:
        raise ExportError(
            f"got {len(feature_names)} feature names for a model with "
            f"{n_features} features"
        )
    return {
        "format_version": FORMAT_VERSION,
        "model_kind": kind,
        "n_features": n_features,
        "feature_names": feature_names,
        "trees": [_tree_record(tree) for tree in trees],
    }


def export_model(model, feature_names, path) -> None:
    """Write the document for ``model`` to ``path`` (atomically)."""
    text = json.dumps(model_to_document(model, feature_names), indent=2) + "\n"
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
