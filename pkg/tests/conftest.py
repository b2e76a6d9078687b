import sys
import numpy as np
import pytest
from hypothesis import settings

from eccd.data import Dataset, SyntheticConfig, generate_synthetic, standardize
from eccd.families import BERNOULLI

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def make_problem(n, p, family=BERNOULLI, rho=0.0, sparsity=None, seed=0, signal=(1.0, 2.0)):
    """Standardized synthetic instance."""
    k = sparsity if sparsity is not None else max(1, min(p, 5))
    d, beta = generate_synthetic(SyntheticConfig(n, p, rho, k, signal, seed, family))
    return standardize(d)


def std_dataset(x, y):
    return standardize(Dataset(np.asarray(x, float), np.asarray(y, float)))


@pytest.fixture
def logistic_small():
    return make_problem(30, 12, seed=3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
