"""Command-line entry point: export a pickled sklearn model to JSON."""

from __future__ import annotations

import argparse
import os
import sys

import joblib
from sklearn.exceptions import NotFittedError

from .exporter import ExportError, export_model


def load_feature_names(source: str) -> list[str]:
    """Feature names from a CSV header file, or a comma-separated list."""
    if os.path.exists(source):
        with open(source, encoding="utf-8") as handle:
            header = handle.readline().strip()
        names = [name.strip() for name in header.split(",")]
    else:
        names = [name.strip() for name in source.split(",")]
    names = [name for name in names if name]
    if not names:
        raise ExportError(f"no feature names in {source!r}")
    return names


def cmd_export(args) -> int:
    model = joblib.load(args.model)
    names = load_feature_names(args.features)
    export_model(model, names, args.out)
    print(f"model written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treerules-bridge",
        description="Export scikit-learn tree models to the treerules JSON format.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    export = sub.add_parser("export", help="convert a pickled model")
    export.add_argument("--model", required=True, help="joblib/pickle file of a fitted model")
    export.add_argument(
        "--features",
        required=True,
        help="CSV file whose header names the features, or a comma-separated list",
    )
    export.add_argument("--out", required=True, help="output JSON path")
    export.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ExportError, NotFittedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
