"""CSV ingestion, feature schemas, target encoding and dataset splitting.

All model-facing data is numeric.  A :class:`FeatureSchema` names the feature
columns in order, names the target column, and maps exactly two raw target
labels onto the classes 0 and 1.  Rows whose target label is not in the
mapping are dropped (the count is logged), which is how multi-label sources
are narrowed to a binary problem.

Schema config files use a flat ``key = value`` format::

    features = loan_amnt, int_rate, dti
    target = loan_status
    label.Fully Paid = 1
    label.Charged Off = 0
    missing = drop-row
    bad_number = abort

``missing`` is one of ``drop-row`` (default) or ``impute-median``;
``bad_number`` is one of ``abort`` (default) or ``drop``.  Blank lines and
lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._io import atomic_write_text

logger = logging.getLogger(__name__)

MISSING_POLICIES = ("drop-row", "impute-median")
BAD_NUMBER_POLICIES = ("abort", "drop")

# cell spellings treated as an absent value
_MISSING_TOKENS = frozenset({"", "na", "n/a", "nan", "null", "none"})

# separators reserved by the rule CSV and schema config formats
_FORBIDDEN_NAME_CHARS = frozenset(",;|")


class SchemaError(ValueError):
    """A schema, schema config file, or config-level option is invalid."""


class DataLoadError(RuntimeError):
    """A CSV file cannot be loaded under the given options."""


class EmptyDataError(DataLoadError):
    """Loading (or an operation on loaded data) yields zero usable rows."""


@dataclass
class FeatureSchema:
    """Ordered numeric feature columns plus a two-label target mapping.

    ``target_mapping`` maps raw label strings onto the classes 0 and 1; both
    classes must appear exactly once.
    """

    feature_names: tuple[str, ...]
    target_name: str
    target_mapping: dict[str, int]

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)
        if not self.feature_names:
            raise SchemaError("schema needs at least one feature")
        seen = set()
        for name in self.feature_names:
            if not name:
                raise SchemaError("feature names must be non-empty")
            bad = _FORBIDDEN_NAME_CHARS.intersection(name)
            if bad:
                raise SchemaError(
                    f"feature name {name!r} contains reserved character {sorted(bad)[0]!r}"
                )
            if name in seen:
                raise SchemaError(f"duplicate feature name {name!r}")
            seen.add(name)
        if not self.target_name:
            raise SchemaError("schema needs a target column name")
        values = sorted(self.target_mapping.values())
        if values != [0, 1]:
            raise SchemaError(
                "target_mapping must map exactly two labels onto classes 0 and 1"
            )

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def inverse_mapping(self) -> dict[int, str]:
        return {cls: raw for raw, cls in self.target_mapping.items()}


@dataclass(frozen=True)
class LoadOptions:
    """Row-level policies applied while loading.

    missing: what to do with rows that have absent feature cells.
    bad_number: what to do with rows whose feature cell fails to parse.
    """

    missing: str = "drop-row"
    bad_number: str = "abort"

    def __post_init__(self):
        if self.missing not in MISSING_POLICIES:
            raise SchemaError(
                f"missing policy must be one of {MISSING_POLICIES}, got {self.missing!r}"
            )
        if self.bad_number not in BAD_NUMBER_POLICIES:
            raise SchemaError(
                f"bad_number policy must be one of {BAD_NUMBER_POLICIES}, got {self.bad_number!r}"
            )


@dataclass
class Dataset:
    """A loaded table: float64 feature matrix X and int64 class vector y."""

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        if self.X.shape[1] != self.schema.n_features:
            raise ValueError(
                f"X has {self.X.shape[1]} columns, schema names {self.schema.n_features}"
            )
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("y length must match the number of rows in X")
        if self.X.size and not np.isfinite(self.X).all():
            raise ValueError("X contains NaN or infinite values")
        if self.y.size and not np.isin(self.y, (0, 1)).all():
            raise ValueError("y must contain only 0 and 1")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def _feature_columns(header: list[str], feature_names) -> list[int]:
    positions = {name: i for i, name in enumerate(header)}
    feature_cols = []
    for name in feature_names:
        if name not in positions:
            raise SchemaError(f"feature column {name!r} not found in CSV header")
        feature_cols.append(positions[name])
    return feature_cols


def _parse_feature_cells(row, feature_cols, options: LoadOptions, line_no: int):
    """Parse one row's feature cells.

    Returns (values, ok); values use NaN for missing cells.  ok=False means
    the row is dropped under bad_number="drop"; a parse failure under
    "abort" raises DataLoadError naming the line.
    """
    values = np.empty(len(feature_cols))
    for j, col in enumerate(feature_cols):
        token = row[col].strip() if col < len(row) else ""
        if token.lower() in _MISSING_TOKENS:
            values[j] = math.nan
            continue
        try:
            parsed = float(token)
        except ValueError:
            if options.bad_number == "drop":
                return None, False
            raise DataLoadError(
                f"line {line_no}: cannot parse {token!r} as a number"
            ) from None
        if math.isnan(parsed):
            values[j] = math.nan
        elif math.isinf(parsed):
            if options.bad_number == "drop":
                return None, False
            raise DataLoadError(f"line {line_no}: non-finite value {token!r}")
        else:
            values[j] = parsed
    return values, True


def _apply_missing_policy(rows: list[np.ndarray], options: LoadOptions):
    """Resolve NaN cells; returns (matrix, keep_mask over the input rows)."""
    X = np.array(rows) if rows else np.empty((0, 0))
    if X.size == 0:
        return X, np.ones(len(rows), dtype=bool)
    row_has_nan = np.isnan(X).any(axis=1)
    if options.missing == "drop-row":
        keep = ~row_has_nan
        dropped = int(row_has_nan.sum())
        if dropped:
            logger.info("dropped %d rows with missing feature values", dropped)
        return X[keep], keep
    # impute-median: per-column median over the non-missing cells
    for j in range(X.shape[1]):
        col = X[:, j]
        mask = np.isnan(col)
        if not mask.any():
            continue
        present = col[~mask]
        if present.size == 0:
            raise DataLoadError(f"column {j} has no values to impute a median from")
        col[mask] = np.median(present)
    imputed = int(row_has_nan.sum())
    if imputed:
        logger.info("imputed medians into %d rows with missing feature values", imputed)
    return X, np.ones(X.shape[0], dtype=bool)


def load_csv(path, schema: FeatureSchema, options: LoadOptions = LoadOptions()) -> Dataset:
    """Load a labelled CSV into a :class:`Dataset`.

    Rows whose target label is absent from the schema mapping are dropped and
    counted; feature cells follow the missing/bad_number policies in
    ``options``.  Raises :class:`EmptyDataError` when nothing usable remains.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataError(f"{path}: file is empty") from None
        feature_cols = _feature_columns(header, schema.feature_names)
        try:
            target_col = header.index(schema.target_name)
        except ValueError:
            raise SchemaError(
                f"target column {schema.target_name!r} not found in CSV header"
            ) from None
        rows = []
        targets = []
        unmapped = 0
        bad = 0
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            raw_label = row[target_col].strip() if target_col < len(row) else ""
            if raw_label not in schema.target_mapping:
                unmapped += 1
                continue
            values, ok = _parse_feature_cells(row, feature_cols, options, line_no)
            if not ok:
                bad += 1
                continue
            rows.append(values)
            targets.append(schema.target_mapping[raw_label])
    if unmapped:
        logger.info("dropped %d rows with unmapped target labels", unmapped)
    if bad:
        logger.info("dropped %d rows with unparseable feature values", bad)
    X, keep = _apply_missing_policy(rows, options)
    y = np.asarray(targets, dtype=np.int64)[keep] if targets else np.empty(0, np.int64)
    if X.shape[0] == 0:
        raise EmptyDataError(f"{path}: no usable rows after loading")
    return Dataset(schema=schema, X=X, y=y)


def load_matrix_csv(path, feature_names, options: LoadOptions = LoadOptions()) -> np.ndarray:
    """Load the named feature columns from a CSV, in the given order.

    Used for scoring inputs: no target column is required, every row is
    kept, subject to the missing/bad_number policies.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataError(f"{path}: file is empty") from None
        feature_cols = _feature_columns(header, feature_names)
        rows = []
        bad = 0
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            values, ok = _parse_feature_cells(row, feature_cols, options, line_no)
            if not ok:
                bad += 1
                continue
            rows.append(values)
    if bad:
        logger.info("dropped %d rows with unparseable feature values", bad)
    X, _ = _apply_missing_policy(rows, options)
    if X.shape[0] == 0:
        raise EmptyDataError(f"{path}: no usable rows after loading")
    return X


def save_csv(data: Dataset, path) -> str:
    """Write a dataset back to CSV with raw target labels; returns the text."""
    inverse = data.schema.inverse_mapping()
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(data.schema.feature_names) + [data.schema.target_name])
    for row, cls in zip(data.X, data.y):
        writer.writerow([repr(float(v)) for v in row] + [inverse[int(cls)]])
    text = buffer.getvalue()
    atomic_write_text(path, text)
    return text


def split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Shuffle rows with the seeded generator and cut once.

    The train side gets floor(train_fraction * n) rows, computed over the
    decimal the caller wrote (0.29 of 100 rows is 29 even though the float
    product lands just under it).  Both sides keep the shuffled order.
    """
    if data.n_samples < 2:
        raise ValueError("need at least 2 rows to split")
    train_fraction = float(train_fraction)
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = data.n_samples
    n_train = int(Fraction(repr(train_fraction)) * n)
    if n_train == 0 or n_train == n:
        raise ValueError(
            f"train_fraction={train_fraction} leaves an empty side for n={n}"
        )
    order = np.random.default_rng(seed).permutation(n)
    train_idx, test_idx = order[:n_train], order[n_train:]
    make = lambda idx: Dataset(schema=data.schema, X=data.X[idx], y=data.y[idx])
    return make(train_idx), make(test_idx)


@dataclass(frozen=True)
class FeatureClassSummary:
    """Distribution of one feature inside one target class."""

    feature_name: str
    target_class: int
    count: int
    mean: float
    std: float
    minimum: float
    q25: float
    q50: float
    q75: float
    maximum: float


def summarize(data: Dataset) -> list[FeatureClassSummary]:
    """Per-(feature, class) stats, feature-major in schema order.

    std uses ddof=1 and is 0.0 for a single row; quantiles use linear
    interpolation.  Classes absent from the data produce no records.
    """
    if data.n_samples == 0:
        raise EmptyDataError("cannot summarize an empty dataset")
    out = []
    classes = [cls for cls in (0, 1) if (data.y == cls).any()]
    for j, name in enumerate(data.schema.feature_names):
        for cls in classes:
            col = data.X[data.y == cls, j]
            q25, q50, q75 = np.quantile(col, (0.25, 0.5, 0.75))
            out.append(
                FeatureClassSummary(
                    feature_name=name,
                    target_class=cls,
                    count=int(col.size),
                    mean=float(col.mean()),
                    std=float(col.std(ddof=1)) if col.size > 1 else 0.0,
                    minimum=float(col.min()),
                    q25=float(q25),
                    q50=float(q50),
                    q75=float(q75),
                    maximum=float(col.max()),
                )
            )
    return out


def format_summary_csv(summaries: list[FeatureClassSummary]) -> str:
    lines = ["feature,target_class,count,mean,std,min,q25,q50,q75,max"]
    for s in summaries:
        lines.append(
            ",".join(
                [
                    s.feature_name,
                    str(s.target_class),
                    str(s.count),
                    repr(s.mean),
                    repr(s.std),
                    repr(s.minimum),
                    repr(s.q25),
                    repr(s.q50),
                    repr(s.q75),
                    repr(s.maximum),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def read_schema_config(path) -> tuple[FeatureSchema, LoadOptions]:
    """Parse a ``key = value`` schema config file (format in module docstring)."""
    features: tuple[str, ...] | None = None
    target: str | None = None
    mapping: dict[str, int] = {}
    missing = "drop-row"
    bad_number = "abort"
    with open(path, encoding="utf-8") as handle:
        for line_no, raw_line in enumerate(handle, start=1):
            line = raw_line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SchemaError(f"{path}:{line_no}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "features":
                features = tuple(name.strip() for name in value.split(","))
            elif key == "target":
                target = value
            elif key.startswith("label."):
                raw = key[len("label."):].strip()
                if value not in ("0", "1"):
                    raise SchemaError(
                        f"{path}:{line_no}: label value must be 0 or 1, got {value!r}"
                    )
                if raw in mapping:
                    raise SchemaError(f"{path}:{line_no}: duplicate label {raw!r}")
                mapping[raw] = int(value)
            elif key == "missing":
                missing = value
            elif key == "bad_number":
                bad_number = value
            else:
                raise SchemaError(f"{path}:{line_no}: unknown key {key!r}")
    if features is None:
        raise SchemaError(f"{path}: missing 'features' entry")
    if target is None:
        raise SchemaError(f"{path}: missing 'target' entry")
    if len(mapping) != 2:
        raise SchemaError(f"{path}: need exactly two label.<raw> entries, got {len(mapping)}")
    schema = FeatureSchema(feature_names=features, target_name=target, target_mapping=mapping)
    return schema, LoadOptions(missing=missing, bad_number=bad_number)
