"""Synthetic loan-book generator used across the suite.

Produces a table shaped like a consumer lending export: twenty numeric
columns with realistic couplings (installments derive from amount and rate,
recoveries only appear on bad loans) and a three-way status label where
"Current" rows are still open and carry no outcome.  The signal is strong
enough that small trees separate the classes well but never perfectly.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from treerules.data import Dataset, FeatureSchema

FEATURE_NAMES = (
    "loan_amnt",
    "funded_amnt",
    "int_rate",
    "installment",
    "annual_inc",
    "dti",
    "delinq_2yrs",
    "open_acc",
    "revol_bal",
    "revol_util",
    "total_acc",
    "total_pymnt",
    "total_rec_prncp",
    "total_rec_int",
    "recoveries",
    "collection_recovery_fee",
    "last_pymnt_amnt",
    "tot_cur_bal",
    "total_rev_hi_lim",
    "mths_since_recent_acct",
)

TARGET_NAME = "loan_status"
LABELS = {"Fully Paid": 1, "Charged Off": 0}


def loan_schema() -> FeatureSchema:
    return FeatureSchema(
        feature_names=FEATURE_NAMES,
        target_name=TARGET_NAME,
        target_mapping=dict(LABELS),
    )


def _standardize(v: np.ndarray) -> np.ndarray:
    return (v - v.mean()) / v.std()


def make_loan_table(n: int, seed: int, current_fraction: float = 0.0):
    """Return (X, labels): a float64 (n, 20) matrix and raw status strings."""
    rng = np.random.default_rng(seed)
    loan_amnt = np.round(rng.uniform(1_000, 40_000, n), -2)
    haircut = rng.random(n) < 0.03
    funded_amnt = np.where(haircut, np.round(loan_amnt * 0.9, -2), loan_amnt)
    int_rate = np.round(rng.uniform(5.3, 29.0, n), 2)
    monthly = int_rate / 1200.0
    installment = np.round(
        funded_amnt * monthly / (1.0 - (1.0 + monthly) ** -36), 2
    )
    annual_inc = np.round(rng.lognormal(11.0, 0.5, n), 0)
    dti = np.round(rng.uniform(0.0, 40.0, n), 2)
    delinq_2yrs = rng.poisson(0.3, n).astype(np.float64)
    open_acc = (rng.poisson(10, n) + 1).astype(np.float64)
    revol_bal = np.round(rng.lognormal(8.5, 1.1, n), 0)
    revol_util = np.round(rng.uniform(0.0, 120.0, n), 1)
    total_acc = open_acc + rng.poisson(12, n)
    tot_cur_bal = np.round(rng.lognormal(11.3, 1.0, n), 0)
    total_rev_hi_lim = np.round(revol_bal * rng.uniform(1.1, 4.0, n), -2)
    mths_since_recent_acct = rng.integers(0, 25, n).astype(np.float64)

    risk = (
        -1.1 * _standardize(int_rate)
        - 0.6 * _standardize(dti)
        + 0.5 * _standardize(np.log(annual_inc))
        - 0.4 * _standardize(revol_util)
        - 0.5 * delinq_2yrs
        - 0.2 * _standardize(loan_amnt)
        + rng.normal(0.0, 1.2, n)
    )
    paid = rng.random(n) < 1.0 / (1.0 + np.exp(-(risk + 0.8)))

    paid_ratio = rng.uniform(0.1, 0.45, n)
    total_rec_prncp = np.where(paid, funded_amnt, np.round(funded_amnt * paid_ratio, 2))
    interest_share = rng.uniform(0.05, 0.35, n)
    total_rec_int = np.round(total_rec_prncp * interest_share, 2)
    total_pymnt = np.round(total_rec_prncp + total_rec_int, 2)
    recoveries = np.where(
        paid, 0.0, np.round(funded_amnt * rng.uniform(0.0, 0.25, n), 2)
    )
    collection_recovery_fee = np.round(recoveries * 0.1, 2)
    last_pymnt_amnt = np.where(
        paid,
        np.round(installment + funded_amnt * rng.uniform(0.0, 0.5, n), 2),
        np.round(installment * rng.uniform(0.0, 1.0, n), 2),
    )

    X = np.column_stack(
        [
            loan_amnt,
            funded_amnt,
            int_rate,
            installment,
            annual_inc,
            dti,
            delinq_2yrs,
            open_acc,
            revol_bal,
            revol_util,
            total_acc,
            total_pymnt,
            total_rec_prncp,
            total_rec_int,
            recoveries,
            collection_recovery_fee,
            last_pymnt_amnt,
            tot_cur_bal,
            total_rev_hi_lim,
            mths_since_recent_acct,
        ]
    ).astype(np.float64)

    labels = np.where(paid, "Fully Paid", "Charged Off").astype(object)
    if current_fraction > 0.0:
        still_open = rng.random(n) < current_fraction
        labels[still_open] = "Current"
    return X, [str(label) for label in labels]


def make_loan_dataset(n: int, seed: int) -> Dataset:
    """A fully labelled dataset (no open loans)."""
    X, labels = make_loan_table(n, seed)
    schema = loan_schema()
    y = np.array([schema.target_mapping[label] for label in labels], dtype=np.int64)
    return Dataset(schema=schema, X=X, y=y)


def loan_csv_text(n: int, seed: int, current_fraction: float = 0.0) -> str:
    X, labels = make_loan_table(n, seed, current_fraction)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(FEATURE_NAMES) + [TARGET_NAME])
    for row, label in zip(X, labels):
        writer.writerow([repr(float(v)) for v in row] + [label])
    return buffer.getvalue()


def write_loan_csv(path, n: int, seed: int, current_fraction: float = 0.0) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(loan_csv_text(n, seed, current_fraction))


SCHEMA_CONFIG_TEXT = """\
# demo loan book schema
features = loan_amnt, funded_amnt, int_rate, installment, annual_inc, dti, delinq_2yrs, open_acc, revol_bal, revol_util, total_acc, total_pymnt, total_rec_prncp, total_rec_int, recoveries, collection_recovery_fee, last_pymnt_amnt, tot_cur_bal, total_rev_hi_lim, mths_since_recent_acct
target = loan_status
label.Fully Paid = 1
label.Charged Off = 0
missing = drop-row
bad_number = abort
"""


def write_schema_config(path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(SCHEMA_CONFIG_TEXT)
