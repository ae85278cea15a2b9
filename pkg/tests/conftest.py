import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from filterbench.core import LabeledDataset, Role

# property tests run over at least 200 randomized instances each
settings.register_profile(
    "default", max_examples=200, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def make_dataset(X, y, roles=None, name="toy"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if roles is None:
        roles = [Role.IRRELEVANT] * X.shape[1]
    return LabeledDataset(X, np.asarray(y), tuple(roles), name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
