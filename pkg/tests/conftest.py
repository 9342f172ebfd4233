import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import synth
from treerules import CartClassifier, ForestClassifier

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def loans_small():
    return synth.make_loan_dataset(2_000, seed=101)


@pytest.fixture(scope="session")
def loans_dt(loans_small):
    model = CartClassifier(max_depth=5, max_leaf_nodes=10, max_features=50, seed=7)
    model.fit(loans_small.X, loans_small.y)
    model.feature_names_in_ = loans_small.schema.feature_names
    return model


@pytest.fixture(scope="session")
def loans_rf(loans_small):
    model = ForestClassifier(
        n_estimators=5, max_depth=10, max_features=4, seed=7
    )
    model.fit(loans_small.X, loans_small.y)
    model.feature_names_in_ = loans_small.schema.feature_names
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
