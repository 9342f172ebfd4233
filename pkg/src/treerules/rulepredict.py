"""Prediction straight from rules, and rule-vs-model equivalence checking.

The rule path mirrors the model arithmetic exactly: per-tree firing-rule
probabilities are accumulated in tree order and divided by the same tree
count, so a correct rule set reproduces the model's probabilities bit for
bit, not merely within a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_text
from ._validation import check_feature_matrix, check_sample
from .data import Dataset, EmptyDataError
from .rules import Rule, RuleConsistencyError, RuleSet, _split_rule_block
from .tree import tree_apply


def _rule_mask(rule: Rule, X: np.ndarray) -> np.ndarray:
    mask = np.ones(X.shape[0], dtype=bool)
    for pred in rule.predicates:
        column = X[:, pred.feature_index]
        if pred.op == "le":
            mask &= column <= pred.threshold
        else:
            mask &= column > pred.threshold
    return mask


@dataclass
class _CompiledTree:
    """Node arrays rebuilt from one tree's rules, for vectorized descent."""

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    leaf_probabilities: np.ndarray
    n_features: int


def _compile_tree(block: list[Rule], n_features: int) -> _CompiledTree:
    children_left: list[int] = []
    children_right: list[int] = []
    feature: list[int] = []
    threshold: list[float] = []
    probabilities: list[tuple[float, float]] = []
    stack = [(block, 0, -1, False)]
    while stack:
        rules, depth, parent, is_left = stack.pop()
        node = len(children_left)
        children_left.append(-1)
        children_right.append(-1)
        feature.append(-1)
        threshold.append(0.0)
        probabilities.append((0.0, 0.0))
        if parent >= 0:
            if is_left:
                children_left[parent] = node
            else:
                children_right[parent] = node
        if len(rules) == 1 and len(rules[0].predicates) == depth:
            probabilities[node] = rules[0].probabilities
            continue
        f, t, left, right = _split_rule_block(rules, depth)
        feature[node] = f
        threshold[node] = t
        stack.append((right, depth + 1, node, False))
        stack.append((left, depth + 1, node, True))
    return _CompiledTree(
        children_left=np.asarray(children_left, dtype=np.int64),
        children_right=np.asarray(children_right, dtype=np.int64),
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        leaf_probabilities=np.asarray(probabilities, dtype=np.float64),
        n_features=n_features,
    )


def find_firing_rule(rules, x) -> Rule:
    """The unique rule whose conjunction holds for sample ``x``.

    Raises :class:`RuleConsistencyError` when zero or several rules fire,
    which signals a corrupted rule file.
    """
    fired = [rule for rule in rules if rule.matches(x)]
    if len(fired) != 1:
        tree_id = rules[0].tree_id if rules else -1
        raise RuleConsistencyError(
            f"tree {tree_id}: {len(fired)} rules fire for the sample, expected 1"
        )
    return fired[0]


class RulePredictor:
    """Evaluates a :class:`RuleSet` with no model attached.

    With ``compiled=True`` each tree's rules are rebuilt into node arrays at
    construction time and samples descend those arrays; otherwise every
    prediction scans the rules linearly.  Both modes return identical bits
    and both reject rule sets that fail to partition the feature space.
    """

    def __init__(self, ruleset: RuleSet, compiled: bool = False):
        self.ruleset = ruleset
        self.compiled = compiled
        if compiled:
            self._trees = [
                _compile_tree(list(ruleset.rules_for_tree(t)), ruleset.n_features)
                for t in range(ruleset.n_trees)
            ]

    def predict_one(self, x) -> np.ndarray:
        """Class probabilities for a single sample, shape (2,)."""
        x = check_sample(x, self.ruleset.n_features)
        return self.predict_proba(x[None, :])[0]

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities for each row of X, shape (n, 2)."""
        X = check_feature_matrix(X, self.ruleset.n_features)
        total = np.zeros((X.shape[0], 2))
        if self.compiled:
            for tree in self._trees:
                leaves = tree_apply(tree, X)
                total += tree.leaf_probabilities[leaves]
        else:
            for tree_id in range(self.ruleset.n_trees):
                contribution = np.zeros((X.shape[0], 2))
                fired = np.zeros(X.shape[0], dtype=np.int64)
                for rule in self.ruleset.rules_for_tree(tree_id):
                    mask = _rule_mask(rule, X)
                    fired += mask
                    contribution[mask] = rule.probabilities
                if X.shape[0] and (fired != 1).any():
                    bad = int(np.nonzero(fired != 1)[0][0])
                    raise RuleConsistencyError(
                        f"tree {tree_id}: {int(fired[bad])} rules fire for "
                        f"sample {bad}, expected 1"
                    )
                total += contribution
        total /= self.ruleset.normalization
        return total

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def predict_proba_from_rules(ruleset: RuleSet, X, compiled: bool = False) -> np.ndarray:
    return RulePredictor(ruleset, compiled=compiled).predict_proba(X)


@dataclass(frozen=True)
class ProbabilityStats:
    """Distribution summary of one probability column."""

    count: int
    mean: float
    std: float
    minimum: float
    q25: float
    q50: float
    q75: float
    maximum: float


def _probability_stats(values: np.ndarray) -> ProbabilityStats:
    q25, q50, q75 = np.quantile(values, (0.25, 0.5, 0.75))
    return ProbabilityStats(
        count=int(values.size),
        mean=float(values.mean()),
        std=float(values.std(ddof=1)) if values.size > 1 else 0.0,
        minimum=float(values.min()),
        q25=float(q25),
        q50=float(q50),
        q75=float(q75),
        maximum=float(values.max()),
    )


@dataclass
class EquivalenceReport:
    """Side-by-side comparison of rule and model class-1 probabilities.

    ``abs_differences`` covers both class columns per sample (the larger of
    the two gaps), so ``max_abs_difference == 0.0`` certifies full bitwise
    agreement, not only the reported class-1 column.
    """

    rule_probabilities: np.ndarray
    model_probabilities: np.ndarray
    abs_differences: np.ndarray
    rule_stats: ProbabilityStats
    model_stats: ProbabilityStats
    max_abs_difference: float

    def per_sample(self):
        """Yield (sample_index, rule_probability, model_probability, abs_diff)."""
        for i in range(self.rule_probabilities.size):
            yield (
                i,
                float(self.rule_probabilities[i]),
                float(self.model_probabilities[i]),
                float(self.abs_differences[i]),
            )

    @property
    def exact(self) -> bool:
        return self.max_abs_difference == 0.0


def verify_equivalence(model, ruleset: RuleSet, data, compiled: bool = False) -> EquivalenceReport:
    """Compare model and rule probabilities on a dataset or feature matrix."""
    X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    X = check_feature_matrix(X)
    if X.shape[0] == 0:
        raise EmptyDataError("cannot verify equivalence on an empty dataset")
    model_probs = model.predict_proba(X)
    rule_probs = RulePredictor(ruleset, compiled=compiled).predict_proba(X)
    diffs = np.abs(rule_probs - model_probs).max(axis=1)
    return EquivalenceReport(
        rule_probabilities=rule_probs[:, 1].copy(),
        model_probabilities=model_probs[:, 1].copy(),
        abs_differences=diffs,
        rule_stats=_probability_stats(rule_probs[:, 1]),
        model_stats=_probability_stats(model_probs[:, 1]),
        max_abs_difference=float(diffs.max()),
    )


def format_equivalence_csv(report: EquivalenceReport) -> str:
    lines = ["sample_index,rule_probability,model_probability,absolute_difference"]
    for i, rule_p, model_p, diff in report.per_sample():
        lines.append(f"{i},{rule_p!r},{model_p!r},{diff!r}")
    lines.append("# stat,rule_probability,model_probability")

    def cells(stats: ProbabilityStats) -> list[str]:
        return [
            str(stats.count),
            repr(stats.mean),
            repr(stats.std),
            repr(stats.minimum),
            repr(stats.q25),
            repr(stats.q50),
            repr(stats.q75),
            repr(stats.maximum),
        ]

    stat_names = ("count", "mean", "std", "min", "q25", "q50", "q75", "max")
    for name, left, right in zip(stat_names, cells(report.rule_stats), cells(report.model_stats)):
        lines.append(f"# {name},{left},{right}")
    lines.append(f"# max_abs_difference,{report.max_abs_difference!r}")
    return "\n".join(lines) + "\n"


def write_equivalence_csv(report: EquivalenceReport, path) -> None:
    atomic_write_text(path, format_equivalence_csv(report))


def roc_auc(scores, targets) -> tuple[list[tuple[float, float]], float]:
    """ROC points and the area under them, ties handled by grouping.

    Scores are processed as descending distinct groups, so tied scores form
    one diagonal segment.  The area accumulates in exact integer arithmetic
    (twice the concordant pairs plus ties) and is divided once at the end;
    the result therefore equals the pairwise ranking statistic bit for bit.
    """
    scores = np.asarray(scores, dtype=np.float64)
    targets = np.asarray(targets)
    if scores.ndim != 1 or targets.shape != scores.shape:
        raise ValueError("scores and targets must be 1-D and the same length")
    if scores.size and not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    n_pos = int((targets == 1).sum())
    n_neg = int((targets == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    values, inverse = np.unique(scores, return_inverse=True)
    pos_per_value = np.bincount(inverse[targets == 1], minlength=values.size)
    total_per_value = np.bincount(inverse, minlength=values.size)
    points = [(0.0, 0.0)]
    true_pos = 0
    false_pos = 0
    numerator = 0  # 2 * n_pos * n_neg * area, exact
    for group in range(values.size - 1, -1, -1):
        group_pos = int(pos_per_value[group])
        group_neg = int(total_per_value[group]) - group_pos
        numerator += group_neg * (2 * true_pos + group_pos)
        true_pos += group_pos
        false_pos += group_neg
        points.append((false_pos / n_neg, true_pos / n_pos))
    auc = numerator / (2 * n_pos * n_neg)
    return points, auc
