import subprocess
import sys

import numpy as np
import pytest


def make_data(n: int, seed: int):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 6))
    weights = np.array([1.2, -0.7, 0.4, 0.0, 2.0, -1.1])
    y = ((X @ weights + rng.normal(scale=1.0, size=n)) > 0).astype(np.int64)
    return X, y


FEATURE_NAMES = [f"x{i}" for i in range(6)]


def write_matrix_csv(path, X) -> None:
    lines = [",".join(FEATURE_NAMES)]
    for row in X:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def run_engine(*argv):
    """Run the main toolkit's CLI in a subprocess (its only interface here)."""
    return subprocess.run(
        [sys.executable, "-m", "treerules", *[str(a) for a in argv]],
        capture_output=True,
        text=True,
    )


def read_probability_csv(path) -> np.ndarray:
    lines = path.read_text().splitlines()
    assert lines[0] == "sample_index,p0,p1"
    return np.array(
        [[float(f) for f in line.split(",")[1:]] for line in lines[1:]]
    )


@pytest.fixture(scope="session")
def data():
    X, y = make_data(4000, seed=77)
    return {"X_train": X[:3000], "y_train": y[:3000], "X_held": X[3000:]}
