import numpy as np
import pytest

from hiercorr.errors import AlphaOutOfRange, ConfigError, QBelowOne
from hiercorr.filters import make_filter, rmt_clean, rmt_filter, rmt_lambda_max, shrink, shrinkage_target
from hiercorr.hclust import alca
from hiercorr.linalg import CorrelationMatrix, symmetric_eigen

from conftest import random_correlation


def test_shrinkage_target_and_endpoints(sample10):
    t = shrinkage_target(sample10)
    v = sample10.values
    mean = v[np.triu_indices(10, 1)].mean()
    assert np.allclose(t.values[np.triu_indices(10, 1)], mean)
    np.testing.assert_array_equal(shrink(sample10, 0.0).values, v)
    np.testing.assert_allclose(shrink(sample10, 1.0).values, t.values, atol=1e-15)
    half = shrink(sample10, 0.5).values
    np.testing.assert_allclose(half, 0.5 * (v + t.values), atol=1e-15)
    for a in (-0.1, 1.1):
        with pytest.raises(AlphaOutOfRange):
            shrink(sample10, a)


def test_rmt_lambda_max():
    assert rmt_lambda_max(100, 400) == pytest.approx(1.0 + 0.25 + 2 * 0.5)
    assert rmt_lambda_max(100, 400, lambda1=20.0) == pytest.approx(0.8 * 2.25)
    with pytest.raises(QBelowOne):
        rmt_lambda_max(100, 99)


def test_rmt_keeps_signal_and_flattens_bulk(rng):
    n, t = 40, 200
    c = random_correlation(n, rng, t)
    w = symmetric_eigen(c).eigenvalues
    lam = rmt_lambda_max(n, t, w[0])
    filt, h = rmt_clean(c, t)
    assert isinstance(filt, CorrelationMatrix)
    wh = np.sort(np.linalg.eigvalsh(h))[::-1]
    k = int(np.sum(w >= lam))
    assert 1 <= k < n
    np.testing.assert_allclose(wh[:k], w[:k], rtol=1e-10)
    np.testing.assert_allclose(wh[k:], w[k:].mean(), rtol=1e-10)
    assert np.trace(h) == pytest.approx(n)
    assert symmetric_eigen(filt).eigenvalues[-1] > 0


def test_rmt_on_pure_noise_tends_to_identity(rng):
    x = rng.standard_normal((2000, 10))
    c = np.corrcoef(x, rowvar=False)
    np.fill_diagonal(c, 1.0)
    off = np.abs(rmt_filter(c, 2000).values - np.eye(10)).max()
    assert off < np.abs(c - np.eye(10)).max()


def test_make_filter(sample10):
    np.testing.assert_array_equal(make_filter("ALCA")(sample10).values, alca(sample10)[1].values)
    assert make_filter("identity")(sample10) is sample10
    np.testing.assert_array_equal(make_filter("shrink:0.3")(sample10).values, shrink(sample10, 0.3).values)
    assert make_filter("rmt", 748)(sample10).n == 10
    with pytest.raises(ConfigError):
        make_filter("rmt")
    with pytest.raises(ConfigError):
        make_filter("lasso")
    with pytest.raises(AlphaOutOfRange):
        make_filter("shrink:2")
