"""Human-readable decision paths for single samples and groups.

For one sample, the explanation is every comparison its firing rules make,
across all trees, deduplicated and ordered by how much the model cares
about each feature.  For a group it is the comparisons every member shares.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from ._validation import check_feature_matrix, check_sample
from .rulepredict import find_firing_rule
from .rules import RuleSet


@dataclass(frozen=True)
class Decision:
    """One comparison a sample passed on its way to a leaf."""

    rank: int
    feature_name: str
    feature_index: int
    client_value: float | None
    op: str
    threshold: float
    estimator_id: int


@dataclass
class DecisionPath:
    """An ordered explanation; ``kind`` is "single-client" or "group"."""

    kind: str
    sample_ref: object
    decisions: tuple[Decision, ...]


def _collect_triples(ruleset: RuleSet, x) -> dict[tuple[int, str, float], tuple[int, int]]:
    """Map (feature, op, threshold) -> (estimator_id, depth) of first occurrence.

    Iterates trees in index order and path predicates root-first, keeping
    the first sighting of each exact triple.
    """
    triples: dict[tuple[int, str, float], tuple[int, int]] = {}
    for tree_id in range(ruleset.n_trees):
        rule = find_firing_rule(ruleset.rules_for_tree(tree_id), x)
        for depth, pred in enumerate(rule.predicates):
            key = (pred.feature_index, pred.op, pred.threshold)
            if key not in triples:
                triples[key] = (tree_id, depth)
    return triples


def _order_decisions(triples, importances, feature_names, x):
    """Sort triples by descending importance, ties by (estimator_id, depth)."""
    items = sorted(
        triples.items(),
        key=lambda item: (-importances[item[0][0]], item[1][0], item[1][1]),
    )
    decisions = []
    for rank, ((feature, op, threshold), (estimator_id, _)) in enumerate(items, start=1):
        decisions.append(
            Decision(
                rank=rank,
                feature_name=feature_names[feature],
                feature_index=feature,
                client_value=float(x[feature]) if x is not None else None,
                op=op,
                threshold=threshold,
                estimator_id=estimator_id,
            )
        )
    return tuple(decisions)


def decision_path(model, ruleset: RuleSet, x, sample_ref=None) -> DecisionPath:
    """Explain one sample's prediction.

    Every returned decision is satisfied by the sample, ranks start at 1,
    and exact duplicate comparisons made by several trees appear once.  The
    same feature may legitimately appear more than once with different
    thresholds.
    """
    x = check_sample(x, ruleset.n_features)
    importances = model.feature_importances_
    triples = _collect_triples(ruleset, x)
    decisions = _order_decisions(triples, importances, ruleset.feature_names, x)
    return DecisionPath(kind="single-client", sample_ref=sample_ref, decisions=decisions)


def group_decision_path(model, ruleset: RuleSet, X, sample_ref=None) -> DecisionPath:
    """Explain what a group of samples has in common.

    The group's decisions are the exact (feature, op, threshold) triples
    shared by every member's own path, ordered like a single-sample
    explanation; client values are omitted since members differ.
    """
    X = check_feature_matrix(X, ruleset.n_features)
    if X.shape[0] == 0:
        raise ValueError("cannot explain an empty group")
    member_triples = [_collect_triples(ruleset, row) for row in X]
    first = member_triples[0]
    shared = {
        key: first[key]
        for key in first
        if all(key in other for other in member_triples[1:])
    }
    importances = model.feature_importances_
    decisions = _order_decisions(shared, importances, ruleset.feature_names, None)
    return DecisionPath(kind="group", sample_ref=sample_ref, decisions=decisions)


def load_feature_dictionary(path) -> dict[str, str]:
    """Read a two-column CSV ``feature_name,description`` into a dict."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        if [cell.strip() for cell in header] != ["feature_name", "description"]:
            raise ValueError(f"{path}: expected header 'feature_name,description'")
        dictionary = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{line_no}: expected 2 columns, got {len(row)}")
            dictionary[row[0].strip()] = row[1].strip()
    return dictionary


def _describe(decision: Decision, dictionary) -> str:
    if dictionary and decision.feature_name in dictionary:
        return dictionary[decision.feature_name]
    return decision.feature_name


def render_path_text(path: DecisionPath, dictionary: dict[str, str] | None = None) -> str:
    """One line per decision, e.g. ``decision 2: interest rate (=11.5) <= 12.25``."""
    if not path.decisions:
        return "(no decisions)\n"
    lines = []
    for d in path.decisions:
        symbol = "<=" if d.op == "le" else ">"
        label = _describe(d, dictionary)
        if d.client_value is None:
            lines.append(f"decision {d.rank}: {label} {symbol} {d.threshold!r}")
        else:
            lines.append(
                f"decision {d.rank}: {label} (={d.client_value!r}) {symbol} {d.threshold!r}"
            )
    return "\n".join(lines) + "\n"


def path_to_json(path: DecisionPath, dictionary: dict[str, str] | None = None) -> str:
    document = {
        "kind": path.kind,
        "sample_ref": path.sample_ref,
        "decisions": [
            {
                "rank": d.rank,
                "feature_name": d.feature_name,
                "description": _describe(d, dictionary),
                "feature_index": d.feature_index,
                "client_value": d.client_value,
                "op": d.op,
                "threshold": d.threshold,
                "estimator_id": d.estimator_id,
            }
            for d in path.decisions
        ],
    }
    return json.dumps(document, indent=2) + "\n"
