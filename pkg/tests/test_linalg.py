import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiercorr.errors import (
    DimensionMismatch,
    DimensionTooSmall,
    InputError,
    NotPositiveDefinite,
    ZeroVarianceColumn,
)
from hiercorr.linalg import (
    CorrelationMatrix,
    DataMatrix,
    inverse_and_logdet,
    is_positive_definite,
    pearson_correlation,
    symmetric_eigen,
)

from conftest import random_correlation


def test_data_matrix_shape_and_labels(rng):
    d = DataMatrix(rng.standard_normal((5, 3)), ["a", "b", "c"])
    assert (d.t, d.n) == (5, 3)
    assert d.labels == ("a", "b", "c")
    with pytest.raises(ValueError):
        d.values[0, 0] = 1.0  # read-only


@pytest.mark.parametrize("shape", [(1, 3), (4, 1)])
def test_data_matrix_too_small(shape):
    with pytest.raises(DimensionTooSmall):
        DataMatrix(np.arange(np.prod(shape), dtype=float).reshape(shape))


def test_data_matrix_rejects_nan_and_label_count(rng):
    x = rng.standard_normal((4, 3))
    x[1, 2] = np.nan
    with pytest.raises(InputError):
        DataMatrix(x)
    with pytest.raises(DimensionMismatch):
        DataMatrix(rng.standard_normal((4, 3)), ["a", "b"])


def test_zero_variance_column_is_named(rng):
    x = rng.standard_normal((6, 3))
    x[:, 1] = 2.5
    with pytest.raises(ZeroVarianceColumn) as err:
        DataMatrix(x, ["a", "flat", "c"])
    assert err.value.column == 1 and err.value.label == "flat"


@pytest.mark.parametrize(
    "m",
    [
        [[1.0, 0.2], [0.3, 1.0]],  # asymmetric
        [[1.0, 0.2], [0.2, 0.99]],  # diagonal
        [[1.0, 1.2], [1.2, 1.0]],  # out of range
        [[1.0, 0.2, 0.1], [0.2, 1.0, 0.1]],  # not square
    ],
)
def test_correlation_matrix_invariants(m):
    with pytest.raises(InputError):
        CorrelationMatrix(np.array(m))


def test_pearson_matches_numpy(rng):
    x = rng.standard_normal((50, 6)) @ rng.standard_normal((6, 6))
    c = pearson_correlation(x)
    np.testing.assert_allclose(c.values, np.corrcoef(x, rowvar=False), atol=1e-14)
    assert np.all(np.diag(c.values) == 1.0)


def test_pearson_errors(rng):
    with pytest.raises(DimensionTooSmall):
        pearson_correlation(np.ones((1, 3)))
    x = rng.standard_normal((10, 3))
    x[:, 0] = 0.0
    with pytest.raises(ZeroVarianceColumn):
        pearson_correlation(x)


@settings(max_examples=30, deadline=None)
@given(
    scale=st.lists(st.floats(0.1, 10.0), min_size=4, max_size=4),
    shift=st.lists(st.floats(-5.0, 5.0), min_size=4, max_size=4),
    seed=st.integers(0, 2**32 - 1),
)
def test_pearson_invariant_under_positive_affine_maps(scale, shift, seed):
    x = np.random.default_rng(seed).standard_normal((30, 4))
    a = pearson_correlation(x).values
    b = pearson_correlation(x * np.array(scale) + np.array(shift)).values
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_symmetric_eigen_descending_and_reconstructs(rng):
    c = random_correlation(8, rng)
    e = symmetric_eigen(c)
    assert np.all(np.diff(e.eigenvalues) <= 0)
    v, w = e.eigenvectors, e.eigenvalues
    np.testing.assert_allclose((v * w) @ v.T, c, atol=1e-12)


def test_inverse_and_logdet_against_numpy(rng):
    c = random_correlation(7, rng)
    inv, ld = inverse_and_logdet(c)
    np.testing.assert_allclose(inv @ c, np.eye(7), atol=1e-10)
    assert ld == pytest.approx(np.linalg.slogdet(c)[1], abs=1e-12)


def test_singular_matrix_is_not_positive_definite():
    m = np.ones((3, 3))
    assert not is_positive_definite(m)
    with pytest.raises(NotPositiveDefinite):
        inverse_and_logdet(m)
