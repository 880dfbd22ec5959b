from pathlib import Path

import numpy as np
import pytest

from hiercorr.io import read_correlation_csv, sample_correlation
from hiercorr.linalg import pearson_correlation

FIXTURES = Path(__file__).parent / "fixtures"

# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sample10():
    return sample_correlation()


@pytest.fixture(scope="session")
def alca10_expected():
    return read_correlation_csv(FIXTURES / "alca_filtered_10.csv")


@pytest.fixture(scope="session")
def slca10_expected():
    return read_correlation_csv(FIXTURES / "slca_filtered_10.csv")


def random_correlation(n, rng, t=None):
    """Sample correlation of ``t`` Gaussian records with a random one-factor-plus-noise structure."""
    t = t or 3 * n + 10
    loadings = rng.uniform(-0.2, 0.9, n)
    x = rng.standard_normal((t, 1)) * loadings + rng.standard_normal((t, n))
    return pearson_correlation(x).values


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
