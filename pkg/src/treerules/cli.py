"""Command-line front end.

Subcommands: train, extract, predict, verify, explain, report, summarize.
Exit codes: 0 success (and exact equivalence for verify), 1 runtime/data
errors, 2 configuration/schema errors (argparse uses 2 as well), 3 verify
found a nonzero difference.

Schema and feature-dictionary paths that do not exist relative to the
working directory are retried under ``$TREERULES_CONFIG_DIR``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from ._io import atomic_write_text
from .data import (
    DataLoadError,
    EmptyDataError,
    LoadOptions,
    SchemaError,
    format_summary_csv,
    load_csv,
    load_matrix_csv,
    read_schema_config,
    split,
    summarize,
)
from .explain import (
    decision_path,
    group_decision_path,
    load_feature_dictionary,
    path_to_json,
    render_path_text,
)
from .forest import ForestClassifier
from .interchange import ModelFormatError, export_model_json, import_model_json
from .rulepredict import (
    RulePredictor,
    format_equivalence_csv,
    roc_auc,
    verify_equivalence,
)
from .rules import (
    RuleConsistencyError,
    RuleFileError,
    extract_rules,
    read_rules_csv,
    rules_text,
    write_rules_csv,
)
from .tree import CartClassifier

CONFIG_DIR_ENV = "TREERULES_CONFIG_DIR"

# defaults sized for desk-scale credit data; flags override per run
_KIND_DEFAULTS = {
    "dt": {"max_depth": 5, "max_leaf_nodes": 10, "max_features": 50},
    "rf": {"n_estimators": 5, "max_depth": 10, "max_features": 4},
}


class CliConfigError(Exception):
    """Bad flag values or inconsistent inputs caught by the CLI itself."""


def _resolve_config_path(path: str) -> str:
    if os.path.isabs(path) or os.path.exists(path):
        return path
    config_dir = os.environ.get(CONFIG_DIR_ENV)
    if config_dir:
        candidate = os.path.join(config_dir, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _load_schema(args):
    path = _resolve_config_path(args.schema)
    try:
        return read_schema_config(path)
    except FileNotFoundError:
        raise CliConfigError(f"schema config not found: {path}") from None


def _kind_params(args) -> dict:
    defaults = _KIND_DEFAULTS[args.kind]
    params = {
        "max_depth": args.max_depth,
        "max_features": args.max_features,
        "max_leaf_nodes": args.max_leaf_nodes,
        "min_samples_split": args.min_samples_split,
        "seed": args.seed,
    }
    for key, value in defaults.items():
        if key == "n_estimators":
            continue
        if params.get(key) is None:
            params[key] = value
    if args.kind == "rf":
        params["n_estimators"] = (
            args.n_estimators if args.n_estimators is not None else defaults["n_estimators"]
        )
        params["bootstrap"] = not args.no_bootstrap
    return params


def _safe_auc(model, X, y):
    try:
        _, auc = roc_auc(model.predict_proba(X)[:, 1], y)
        return f"{auc:.6f}"
    except ValueError:
        return "n/a (one class present)"


def cmd_train(args) -> int:
    schema, options = _load_schema(args)
    dataset = load_csv(args.data, schema, options)
    if not 0.0 < args.train_frac < 1.0:
        raise CliConfigError(f"--train-frac must be in (0, 1), got {args.train_frac}")
    train, test = split(dataset, args.train_frac, args.seed)
    params = _kind_params(args)
    if args.kind == "dt":
        model = CartClassifier(**params)
    else:
        model = ForestClassifier(**params)
    model.fit(train.X, train.y)
    model.feature_names_in_ = tuple(schema.feature_names)
    export_model_json(model, args.out)
    trees = model.trees_ if args.kind == "rf" else [model.tree_]
    n_leaves = sum(t.n_leaves for t in trees)
    depth = max(t.max_depth() for t in trees)
    print(
        f"trained {args.kind}: {len(trees)} tree(s), {n_leaves} leaves, max depth {depth}"
    )
    print(f"train rows: {train.n_samples}, test rows: {test.n_samples}")
    print(f"train auc: {_safe_auc(model, train.X, train.y)}")
    print(f"test auc: {_safe_auc(model, test.X, test.y)}")
    print(f"model written to {args.out}")
    return 0


def cmd_extract(args) -> int:
    model = import_model_json(args.model)
    ruleset = extract_rules(model)
    write_rules_csv(ruleset, args.rules_out)
    print(f"extracted {ruleset.n_rules} rules from {ruleset.n_trees} tree(s)")
    print(f"rules written to {args.rules_out}")
    if args.text_out:
        atomic_write_text(args.text_out, rules_text(ruleset))
        print(f"rule text written to {args.text_out}")
    return 0


def _load_scoring_matrix(args, feature_names):
    if args.schema:
        schema, options = _load_schema(args)
        if tuple(schema.feature_names) != tuple(feature_names):
            raise CliConfigError(
                "schema feature names do not match the rule/model feature names"
            )
        return load_matrix_csv(args.data, schema.feature_names, options)
    return load_matrix_csv(args.data, feature_names, LoadOptions())


def format_probability_csv(probabilities) -> str:
    lines = ["sample_index,p0,p1"]
    for i, (p0, p1) in enumerate(probabilities):
        lines.append(f"{i},{float(p0)!r},{float(p1)!r}")
    return "\n".join(lines) + "\n"


def cmd_predict(args) -> int:
    ruleset = read_rules_csv(args.rules)
    X = _load_scoring_matrix(args, ruleset.feature_names)
    predictor = RulePredictor(ruleset, compiled=args.compiled)
    probabilities = predictor.predict_proba(X)
    atomic_write_text(args.out, format_probability_csv(probabilities))
    print(f"scored {X.shape[0]} samples with {ruleset.n_rules} rules")
    print(f"probabilities written to {args.out}")
    return 0


def cmd_verify(args) -> int:
    model = import_model_json(args.model)
    ruleset = read_rules_csv(args.rules)
    if tuple(model.feature_names_in_) != tuple(ruleset.feature_names):
        raise CliConfigError("model and rule file disagree on feature names")
    X = _load_scoring_matrix(args, ruleset.feature_names)
    report = verify_equivalence(model, ruleset, X, compiled=args.compiled)
    if args.out:
        atomic_write_text(args.out, format_equivalence_csv(report))
        print(f"report written to {args.out}")
    print(f"samples: {report.rule_stats.count}")
    print(f"max_abs_difference: {report.max_abs_difference!r}")
    if report.exact:
        print("equivalence: exact")
        return 0
    print("equivalence: FAILED")
    return 3


def _parse_group(text: str) -> list[int]:
    try:
        indices = [int(part) for part in text.split(",")]
    except ValueError:
        raise CliConfigError(f"--group must be comma-separated indices, got {text!r}") from None
    if not indices:
        raise CliConfigError("--group needs at least one index")
    return indices


def cmd_explain(args) -> int:
    model = import_model_json(args.model)
    ruleset = read_rules_csv(args.rules)
    if tuple(model.feature_names_in_) != tuple(ruleset.feature_names):
        raise CliConfigError("model and rule file disagree on feature names")
    X = _load_scoring_matrix(args, ruleset.feature_names)
    dictionary = None
    if args.dictionary:
        dictionary = load_feature_dictionary(_resolve_config_path(args.dictionary))
    if args.sample is not None:
        if not 0 <= args.sample < X.shape[0]:
            raise CliConfigError(
                f"--sample {args.sample} out of range for {X.shape[0]} rows"
            )
        path = decision_path(model, ruleset, X[args.sample], sample_ref=args.sample)
    else:
        indices = _parse_group(args.group)
        bad = [i for i in indices if not 0 <= i < X.shape[0]]
        if bad:
            raise CliConfigError(f"--group indices out of range: {bad}")
        path = group_decision_path(model, ruleset, X[indices], sample_ref=tuple(indices))
    text = render_path_text(path, dictionary)
    sys.stdout.write(text)
    if args.out:
        atomic_write_text(args.out, text)
        print(f"explanation written to {args.out}")
    if args.json_out:
        atomic_write_text(args.json_out, path_to_json(path, dictionary))
        print(f"explanation json written to {args.json_out}")
    return 0


def cmd_report(args) -> int:
    model = import_model_json(args.model)
    schema, options = _load_schema(args)
    if tuple(schema.feature_names) != tuple(model.feature_names_in_):
        raise CliConfigError("schema feature names do not match the model's")
    dataset = load_csv(args.data, schema, options)
    points, auc = roc_auc(model.predict_proba(dataset.X)[:, 1], dataset.y)
    lines = ["fpr,tpr"]
    lines.extend(f"{fpr!r},{tpr!r}" for fpr, tpr in points)
    lines.append(f"# auc,{auc!r}")
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"roc points: {len(points)}")
    print(f"auc: {auc!r}")
    print(f"curve written to {args.out}")
    return 0


def cmd_summarize(args) -> int:
    schema, options = _load_schema(args)
    dataset = load_csv(args.data, schema, options)
    text = format_summary_csv(summarize(dataset))
    if args.out:
        atomic_write_text(args.out, text)
        print(f"summary written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treerules",
        description="Train small tree models, transpile them to if-then rules, "
        "and validate that the rules reproduce the model exactly.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a model and write interchange JSON")
    train.add_argument("--kind", choices=("dt", "rf"), required=True)
    train.add_argument("--data", required=True)
    train.add_argument("--schema", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--train-frac", type=float, default=0.7)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--max-depth", type=int, default=None)
    train.add_argument("--max-features", type=int, default=None)
    train.add_argument("--max-leaf-nodes", type=int, default=None)
    train.add_argument("--min-samples-split", type=int, default=2)
    train.add_argument("--n-estimators", type=int, default=None)
    train.add_argument("--no-bootstrap", action="store_true")
    train.set_defaults(func=cmd_train)

    extract = sub.add_parser("extract", help="transpile a model into rules")
    extract.add_argument("--model", required=True)
    extract.add_argument("--rules-out", required=True)
    extract.add_argument("--text-out", default=None)
    extract.set_defaults(func=cmd_extract)

    predict = sub.add_parser("predict", help="score a CSV using only the rules")
    predict.add_argument("--rules", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument("--schema", default=None)
    predict.add_argument("--out", required=True)
    predict.add_argument("--compiled", action="store_true")
    predict.set_defaults(func=cmd_predict)

    verify = sub.add_parser("verify", help="check rules against the model bit for bit")
    verify.add_argument("--model", required=True)
    verify.add_argument("--rules", required=True)
    verify.add_argument("--data", required=True)
    verify.add_argument("--schema", default=None)
    verify.add_argument("--out", default=None)
    verify.add_argument("--compiled", action="store_true")
    verify.set_defaults(func=cmd_verify)

    explain = sub.add_parser("explain", help="decision path for a sample or group")
    explain.add_argument("--model", required=True)
    explain.add_argument("--rules", required=True)
    explain.add_argument("--data", required=True)
    explain.add_argument("--schema", default=None)
    explain.add_argument("--dictionary", default=None)
    pick = explain.add_mutually_exclusive_group(required=True)
    pick.add_argument("--sample", type=int, default=None)
    pick.add_argument("--group", default=None)
    explain.add_argument("--out", default=None)
    explain.add_argument("--json-out", default=None)
    explain.set_defaults(func=cmd_explain)

    report = sub.add_parser("report", help="ROC curve and AUC on labelled data")
    report.add_argument("--model", required=True)
    report.add_argument("--data", required=True)
    report.add_argument("--schema", required=True)
    report.add_argument("--out", required=True)
    report.set_defaults(func=cmd_report)

    summary = sub.add_parser("summarize", help="per-feature per-class statistics")
    summary.add_argument("--data", required=True)
    summary.add_argument("--schema", required=True)
    summary.add_argument("--out", default=None)
    summary.set_defaults(func=cmd_summarize)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, EmptyDataError, CliConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        DataLoadError,
        RuleFileError,
        RuleConsistencyError,
        ModelFormatError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
