"""Leaf-to-rule extraction and the portable rule CSV format.

Each leaf becomes one rule: the conjunction of edge predicates along its
root-to-leaf path (left edge contributes ``feature <= threshold``, right
edge ``feature > threshold``) plus the leaf's class probabilities.  A model
prediction is then the sum of each tree's firing-rule probabilities divided
by the tree count, which reproduces the model bit for bit.

Rule CSV layout (one file per model)::

    # n_trees=2
    # n_features=3
    # model_kind=forest
    # normalization=2
    # feature_names=age,income,dti
    tree_id,leaf_id,n_leaf_samples,predicates,p0,p1
    0,1,4,0|le|2.5,1.0,0.0
    0,2,6,0|gt|2.5,0.25,0.75
    ...

``predicates`` is a ``;``-separated list of ``feature_index|op|threshold``
triples with op in {le, gt}; an empty field means the tree is a single
leaf.  Thresholds and probabilities are written with repr, so a load
followed by a save reproduces the same floats exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_write_text
from .forest import ForestClassifier
from .tree import LEAF, CartClassifier, Tree

OPS = ("le", "gt")

_CSV_COLUMNS = "tree_id,leaf_id,n_leaf_samples,predicates,p0,p1"
_HEADER_KEYS = ("n_trees", "n_features", "model_kind", "feature_names")


class RuleFileError(ValueError):
    """A rule CSV file cannot be parsed."""


class RuleConsistencyError(RuntimeError):
    """A rule set does not partition the feature space tree by tree.

    Signals a corrupted or hand-edited rule file: for some input either no
    rule of a tree fires, or more than one does.
    """


@dataclass(frozen=True)
class Predicate:
    """One comparison along a path: value <= threshold or value > threshold."""

    feature_index: int
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"op must be one of {OPS}, got {self.op!r}")

    def holds(self, value: float) -> bool:
        if self.op == "le":
            return value <= self.threshold
        return value > self.threshold

    def render(self, feature_names=None) -> str:
        name = (
            feature_names[self.feature_index]
            if feature_names is not None
            else f"f{self.feature_index}"
        )
        symbol = "<=" if self.op == "le" else ">"
        return f"{name} {symbol} {self.threshold!r}"


@dataclass(frozen=True)
class Rule:
    """One leaf: its path conjunction and its class probabilities."""

    tree_id: int
    leaf_id: int
    predicates: tuple[Predicate, ...]
    probabilities: tuple[float, float]
    n_leaf_samples: int

    def matches(self, x) -> bool:
        return all(p.holds(x[p.feature_index]) for p in self.predicates)


@dataclass
class RuleSet:
    """All rules of a model, in tree order then leaf order (left before right).

    ``normalization`` is what a summed prediction is divided by: the tree
    count for a forest, 1 for a single tree.
    """

    rules: tuple[Rule, ...]
    n_trees: int
    n_features: int
    feature_names: tuple[str, ...]
    model_kind: str
    _by_tree: dict[int, tuple[Rule, ...]] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.rules = tuple(self.rules)
        self.feature_names = tuple(self.feature_names)
        if self.model_kind not in ("tree", "forest"):
            raise ValueError(f"model_kind must be tree or forest, got {self.model_kind!r}")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if len(self.feature_names) != self.n_features:
            raise ValueError("feature_names length must equal n_features")
        for rule in self.rules:
            if not 0 <= rule.tree_id < self.n_trees:
                raise ValueError(f"rule tree_id {rule.tree_id} out of range")
            for pred in rule.predicates:
                if not 0 <= pred.feature_index < self.n_features:
                    raise ValueError(
                        f"predicate feature index {pred.feature_index} out of range"
                    )

    @property
    def normalization(self) -> int:
        return self.n_trees if self.model_kind == "forest" else 1

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    def rules_for_tree(self, tree_id: int) -> tuple[Rule, ...]:
        if self._by_tree is None:
            grouped: dict[int, list[Rule]] = {t: [] for t in range(self.n_trees)}
            for rule in self.rules:
                grouped[rule.tree_id].append(rule)
            self._by_tree = {t: tuple(rs) for t, rs in grouped.items()}
        return self._by_tree[tree_id]


def tree_rules(tree: Tree, tree_id: int = 0) -> list[Rule]:
    """One rule per leaf, leaves in depth-first left-then-right order."""
    out: list[Rule] = []
    stack: list[tuple[int, tuple[Predicate, ...]]] = [(0, ())]
    while stack:
        node, path = stack.pop()
        if tree.children_left[node] == LEAF:
            p0, p1 = tree.probabilities[node]
            out.append(
                Rule(
                    tree_id=tree_id,
                    leaf_id=int(node),
                    predicates=path,
                    probabilities=(float(p0), float(p1)),
                    n_leaf_samples=int(tree.n_node_samples[node]),
                )
            )
            continue
        feature = int(tree.feature[node])
        threshold = float(tree.threshold[node])
        stack.append(
            (int(tree.children_right[node]), path + (Predicate(feature, "gt", threshold),))
        )
        stack.append(
            (int(tree.children_left[node]), path + (Predicate(feature, "le", threshold),))
        )
    return out


def _resolve_feature_names(model, feature_names, n_features) -> tuple[str, ...]:
    if feature_names is None:
        feature_names = getattr(model, "feature_names_in_", None)
    if feature_names is None:
        return tuple(f"f{i}" for i in range(n_features))
    feature_names = tuple(str(n) for n in feature_names)
    if len(feature_names) != n_features:
        raise ValueError(
            f"got {len(feature_names)} feature names for {n_features} features"
        )
    return feature_names


def extract_rules(model, feature_names=None) -> RuleSet:
    """Transpile a fitted classifier into its complete rule set."""
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
    names = _resolve_feature_names(model, feature_names, n_features)
    rules: list[Rule] = []
    for tree_id, tree in enumerate(trees):
        rules.extend(tree_rules(tree, tree_id))
    return RuleSet(
        rules=tuple(rules),
        n_trees=len(trees),
        n_features=n_features,
        feature_names=names,
        model_kind=kind,
    )


def _format_predicates(predicates: tuple[Predicate, ...]) -> str:
    return ";".join(
        f"{p.feature_index}|{p.op}|{p.threshold!r}" for p in predicates
    )


def format_rules_csv(ruleset: RuleSet) -> str:
    lines = [
        f"# n_trees={ruleset.n_trees}",
        f"# n_features={ruleset.n_features}",
        f"# model_kind={ruleset.model_kind}",
        f"# normalization={ruleset.normalization}",
        f"# feature_names={','.join(ruleset.feature_names)}",
        _CSV_COLUMNS,
    ]
    for rule in ruleset.rules:
        p0, p1 = rule.probabilities
        lines.append(
            f"{rule.tree_id},{rule.leaf_id},{rule.n_leaf_samples},"
            f"{_format_predicates(rule.predicates)},{p0!r},{p1!r}"
        )
    return "\n".join(lines) + "\n"


def write_rules_csv(ruleset: RuleSet, path) -> None:
    atomic_write_text(path, format_rules_csv(ruleset))


def _parse_predicates(text: str, line_no: int) -> tuple[Predicate, ...]:
    if not text:
        return ()
    predicates = []
    for chunk in text.split(";"):
        parts = chunk.split("|")
        if len(parts) != 3:
            raise RuleFileError(
                f"line {line_no}: predicate {chunk!r} is not index|op|threshold"
            )
        index_text, op, threshold_text = parts
        try:
            index = int(index_text)
        except ValueError:
            raise RuleFileError(
                f"line {line_no}: bad feature index {index_text!r}"
            ) from None
        if op not in OPS:
            raise RuleFileError(f"line {line_no}: bad op {op!r}")
        try:
            threshold = float(threshold_text)
        except ValueError:
            raise RuleFileError(
                f"line {line_no}: bad threshold {threshold_text!r}"
            ) from None
        predicates.append(Predicate(index, op, threshold))
    return tuple(predicates)


def parse_rules_csv(text: str) -> RuleSet:
    """Parse rule CSV text; see the module docstring for the layout."""
    header: dict[str, str] = {}
    rules: list[Rule] = []
    saw_columns = False
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise RuleFileError(f"line {line_no}: bad header line {line!r}")
            key, _, value = body.partition("=")
            header[key.strip()] = value.strip()
            continue
        if not saw_columns:
            if line != _CSV_COLUMNS:
                raise RuleFileError(
                    f"line {line_no}: expected column row {_CSV_COLUMNS!r}"
                )
            saw_columns = True
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise RuleFileError(f"line {line_no}: expected 6 fields, got {len(parts)}")
        tree_text, leaf_text, samples_text, predicates_text, p0_text, p1_text = parts
        try:
            tree_id = int(tree_text)
            leaf_id = int(leaf_text)
            n_leaf_samples = int(samples_text)
            p0 = float(p0_text)
            p1 = float(p1_text)
        except ValueError:
            raise RuleFileError(f"line {line_no}: bad numeric field") from None
        rules.append(
            Rule(
                tree_id=tree_id,
                leaf_id=leaf_id,
                predicates=_parse_predicates(predicates_text, line_no),
                probabilities=(p0, p1),
                n_leaf_samples=n_leaf_samples,
            )
        )
    missing = [key for key in _HEADER_KEYS if key not in header]
    if missing:
        raise RuleFileError(f"missing header entries: {', '.join(missing)}")
    if not saw_columns:
        raise RuleFileError(f"missing column row {_CSV_COLUMNS!r}")
    if not rules:
        raise RuleFileError("rule file has no rules")
    try:
        n_trees = int(header["n_trees"])
        n_features = int(header["n_features"])
    except ValueError:
        raise RuleFileError("n_trees and n_features headers must be integers") from None
    names = tuple(header["feature_names"].split(","))
    try:
        ruleset = RuleSet(
            rules=tuple(rules),
            n_trees=n_trees,
            n_features=n_features,
            feature_names=names,
            model_kind=header["model_kind"],
        )
    except ValueError as exc:
        raise RuleFileError(str(exc)) from None
    if "normalization" in header and header["normalization"] != str(ruleset.normalization):
        raise RuleFileError(
            f"normalization header {header['normalization']!r} does not match "
            f"model_kind/n_trees (expected {ruleset.normalization})"
        )
    return ruleset


def read_rules_csv(path) -> RuleSet:
    with open(path, encoding="utf-8") as handle:
        return parse_rules_csv(handle.read())


def _split_rule_block(block: list[Rule], depth: int):
    """Split rules sharing a path prefix of length ``depth`` on their next predicate.

    Returns (feature_index, threshold, left_block, right_block).  Raises
    RuleConsistencyError when the block does not describe a valid subtree.
    """
    for rule in block:
        if len(rule.predicates) <= depth:
            raise RuleConsistencyError(
                f"tree {rule.tree_id}: rule for leaf {rule.leaf_id} overlaps "
                f"other rules of the same tree"
            )
    first = block[0].predicates[depth]
    if first.op != "le":
        raise RuleConsistencyError(
            f"tree {block[0].tree_id}: expected a 'le' branch first at depth {depth}"
        )
    feature, threshold = first.feature_index, first.threshold
    left: list[Rule] = []
    right: list[Rule] = []
    for rule in block:
        pred = rule.predicates[depth]
        if pred.feature_index != feature or pred.threshold != threshold:
            raise RuleConsistencyError(
                f"tree {rule.tree_id}: rules disagree on the split at depth {depth}"
            )
        (left if pred.op == "le" else right).append(rule)
    if not left or not right:
        raise RuleConsistencyError(
            f"tree {block[0].tree_id}: split at depth {depth} has an empty side"
        )
    return feature, threshold, left, right


def _render_block(block: list[Rule], depth: int, names, indent: str) -> list[str]:
    pad = indent * depth
    if len(block) == 1 and len(block[0].predicates) == depth:
        p0, p1 = block[0].probabilities
        return [f"{pad}return [{p0!r}, {p1!r}]"]
    feature, threshold, left, right = _split_rule_block(block, depth)
    name = names[feature] if names is not None else f"f{feature}"
    lines = [f"{pad}if {name} <= {threshold!r}:"]
    lines.extend(_render_block(left, depth + 1, names, indent))
    lines.append(f"{pad}else:")
    lines.extend(_render_block(right, depth + 1, names, indent))
    return lines


def rules_text(ruleset: RuleSet, indent: str = "    ") -> str:
    """Render the rule set as nested if/else blocks, one ``return`` per leaf.

    Forests get a ``tree <k>:`` heading per tree; a single tree renders as
    one bare block.
    """
    names = ruleset.feature_names
    chunks: list[str] = []
    for tree_id in range(ruleset.n_trees):
        block = list(ruleset.rules_for_tree(tree_id))
        if not block:
            raise RuleConsistencyError(f"tree {tree_id} has no rules")
        rendered = _render_block(block, 0, names, indent)
        if ruleset.n_trees > 1:
            chunks.append(f"tree {tree_id}:")
            chunks.extend(indent + line for line in rendered)
        else:
            chunks.extend(rendered)
    return "\n".join(chunks) + "\n"
