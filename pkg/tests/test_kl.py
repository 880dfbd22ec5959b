import numpy as np
import pytest
from scipy import stats

from hiercorr.errors import (
    DimensionMismatch,
    InsufficientSamples,
    InvalidMu,
    MleFailure,
    NoConvergence,
    NotPositiveDefinite,
)
from hiercorr.hclust import alca
from hiercorr.hnfm import hnfm_from_dendrogram, model_correlation, simulate_student
from hiercorr.kl import (
    GAUSSIAN,
    STUDENT_SMALL_MU,
    StudentParams,
    estimate_mu,
    kl,
    kl_gaussian,
    kl_student_full,
    kl_student_small_mu,
    second_moment_matrix,
    student_mle,
    wishart_expectations,
)
from hiercorr.linalg import pearson_correlation
from hiercorr.synthetic import nested_spec

S1 = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 1.0]])
S2 = np.array([[1.0, 0.6, 0.4], [0.6, 1.0, 0.2], [0.4, 0.2, 1.0]])


def mc_mean(samples):
    return samples.mean(), samples.std(ddof=1) / np.sqrt(samples.size)


def test_gaussian_closed_form_against_monte_carlo():
    x = stats.multivariate_normal(cov=S1).rvs(200_000, random_state=1)
    m, se = mc_mean(
        stats.multivariate_normal(cov=S1).logpdf(x) - stats.multivariate_normal(cov=S2).logpdf(x)
    )
    assert abs(kl_gaussian(S1, S2) - m) < 4 * se


def test_student_full_against_monte_carlo_at_large_n():
    # the trace form replaces the quadratic forms by their large-N values,
    # so the exact divergence is only matched once N is large
    n, mu = 200, 5.0
    rng = np.random.default_rng(0)
    a = np.corrcoef(rng.standard_normal((4 * n, n)), rowvar=False)
    b = 0.7 * a + 0.3 * np.corrcoef(rng.standard_normal((4 * n, n)), rowvar=False)
    np.fill_diagonal(a, 1.0)
    np.fill_diagonal(b, 1.0)
    p = stats.multivariate_t(shape=a * (mu - 2) / mu, df=mu)
    q = stats.multivariate_t(shape=b * (mu - 2) / mu, df=mu)
    x = p.rvs(20_000, random_state=1)
    m, se = mc_mean(p.logpdf(x) - q.logpdf(x))
    assert abs(kl_student_full(a, b, mu) - m) < 4 * se


def test_basic_properties():
    for f in (kl_gaussian, kl_student_small_mu, lambda a, b: kl_student_full(a, b, 6.0)):
        assert f(S1, S1) == pytest.approx(0.0, abs=1e-12)
        assert f(S1, S2) > 0 and f(S2, S1) > 0
        assert f(S1, S2) != pytest.approx(f(S2, S1))
    assert kl(S1, S2, GAUSSIAN) == kl_gaussian(S1, S2)
    assert kl(S1, S2, STUDENT_SMALL_MU) == kl_student_small_mu(S1, S2)
    with pytest.raises(ValueError):
        kl(S1, S2, "other")


def test_small_mu_form_ignores_overall_scale():
    assert kl_student_small_mu(S1, 3.0 * S2) == pytest.approx(kl_student_small_mu(S1, S2), abs=1e-12)


def test_errors():
    with pytest.raises(DimensionMismatch):
        kl_gaussian(S1, np.eye(2))
    with pytest.raises(NotPositiveDefinite):
        kl_gaussian(S1, np.ones((3, 3)))
    with pytest.raises(InvalidMu):
        kl_student_full(S1, S2, 0.0)
    with pytest.raises(InvalidMu):
        StudentParams(2.0)
    with pytest.raises(InsufficientSamples):
        wishart_expectations(10, 11)


def test_student_limits_on_larger_matrices():
    n = 10
    rng = np.random.default_rng(3)
    a = np.corrcoef(rng.standard_normal((40, n)), rowvar=False)
    b = np.corrcoef(rng.standard_normal((40, n)), rowvar=False)
    assert kl_student_full(a, b, 1e4 * n) == pytest.approx(kl_gaussian(a, b), rel=0.01)
    assert kl_student_full(a, b, n / 100) == pytest.approx(kl_student_small_mu(a, b), rel=0.01)


def test_wishart_expectations_small_monte_carlo():
    n, t, reps = 5, 40, 400
    ref = wishart_expectations(n, t)
    rng = np.random.default_rng(4)
    sigma = np.eye(n) * 0.6 + 0.4
    chol = np.linalg.cholesky(sigma)
    ks = [kl_gaussian(sigma, second_moment_matrix(rng.standard_normal((t, n)) @ chol.T)) for _ in range(reps)]
    m, se = mc_mean(np.array(ks))
    assert abs(m - ref.e_sigma_c) < 3 * se
    assert ref.e_c_c == pytest.approx(0.5 * n * (n + 1) / (t - n - 1))


def test_student_mle_small_problem():
    spec = hnfm_from_dendrogram(alca(S2)[0], mu=5.0)
    x = simulate_student(spec, 40_000, np.random.default_rng(6))
    c, iters = student_mle(x, 5.0)
    assert iters <= 500
    assert np.abs(c.values - model_correlation(spec).values).max() < 0.02
    assert c.labels == x.labels


def test_student_mle_large_mu_is_pearson():
    x = stats.multivariate_normal(cov=S2).rvs(5000, random_state=8)
    c, _ = student_mle(x, 1e4)
    assert np.abs(c.values - pearson_correlation(x).values).max() < 1e-3


def test_student_mle_edge_cases(rng):
    c, iters = student_mle(rng.standard_normal((10, 1)), 5.0)
    assert c.values.tolist() == [[1.0]] and iters == 0
    with pytest.raises(InsufficientSamples):
        student_mle(rng.standard_normal((3, 3)), 5.0)
    with pytest.raises(NoConvergence):
        student_mle(rng.standard_normal((50, 3)), 5.0, max_iter=1)


def test_estimate_mu_on_simulated_panel():
    spec = nested_spec(n=100, mu=5.9)
    x = simulate_student(spec, 748, np.random.default_rng(7))
    mean, std = estimate_mu(x)
    assert mean == pytest.approx(5.9, abs=1.0)
    assert std > 0


def test_estimate_mu_constant_column(rng):
    x = rng.standard_normal((30, 3))
    x[:, 2] = 1.0
    with pytest.raises(MleFailure) as err:
        estimate_mu(x)
    assert err.value.column == 2


def test_estimate_mu_on_gaussian_columns(rng):
    mean, _ = estimate_mu(rng.standard_normal((2000, 5)))
    assert mean > 20
