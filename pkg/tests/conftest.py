import numpy as np
import pytest

from target_shapley import GaussianLinearSpec, gaussian_linear


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def spec3():
    return GaussianLinearSpec.default()


@pytest.fixture
def gl3(spec3):
    return gaussian_linear(spec3)


@pytest.fixture
def spec2_easy():
    # p = 0.05 with a correlated pair
    from scipy.stats import norm

    cov = np.array([[1.0, 0.4], [0.4, 2.0]])
    beta = np.array([1.0, 0.7])
    q = beta @ cov @ beta
    return GaussianLinearSpec(beta, np.zeros(2), cov, float(norm.isf(0.05) * np.sqrt(q)))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        passed, detail = RESULTS[n]
        terminalreporter.write_line(f"CRITERION {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
