"""Data containers and dense symmetric-matrix numerics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    DimensionTooSmall,
    InputError,
    NotPositiveDefinite,
    ZeroVarianceColumn,
)

PD_TOL = 1e-10
SYMMETRY_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _default_labels(n):
    return tuple(f"x{i + 1}" for i in range(n))


@dataclass(frozen=True)
class DataMatrix:
    """T x N panel: rows are time records, columns are elements."""

    values: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise InputError("data matrix must be two-dimensional")
        t, n = v.shape
        if t < 2:
            raise DimensionTooSmall(f"need at least 2 records, got {t}")
        if n < 2:
            raise DimensionTooSmall(f"need at least 2 columns, got {n}")
        if not np.all(np.isfinite(v)):
            raise InputError("data matrix contains missing or non-finite entries")
        labels = _default_labels(n) if self.labels is None else tuple(str(x) for x in self.labels)
        if len(labels) != n:
            raise DimensionMismatch(f"{len(labels)} labels for {n} columns")
        const = np.flatnonzero(np.ptp(v, axis=0) == 0)
        if const.size:
            raise ZeroVarianceColumn(int(const[0]), labels[const[0]])
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "labels", labels)

    @property
    def t(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric, unit-diagonal matrix with entries in [-1, 1]."""

    values: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionMismatch(f"correlation matrix must be square, got shape {v.shape}")
        n = v.shape[0]
        if not np.all(np.isfinite(v)):
            raise InputError("correlation matrix contains non-finite entries")
        if np.max(np.abs(v - v.T), initial=0.0) > SYMMETRY_TOL:
            raise InputError("correlation matrix is not symmetric")
        if np.any(np.diag(v) != 1.0):
            raise InputError("correlation matrix diagonal must be exactly 1")
        if np.any(np.abs(v) > 1.0):
            raise InputError("correlation entries must lie in [-1, 1]")
        labels = _default_labels(n) if self.labels is None else tuple(str(x) for x in self.labels)
        if len(labels) != n:
            raise DimensionMismatch(f"{len(labels)} labels for a {n}x{n} matrix")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class FilteredCorrelationMatrix(CorrelationMatrix):
    source: str = field(default="", kw_only=True)


@dataclass(frozen=True)
class SymmetricEigen:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns


def as_correlation(m, labels=None):
    if isinstance(m, CorrelationMatrix):
        return m
    return CorrelationMatrix(m, labels)


def as_values(m):
    return m.values if isinstance(m, (CorrelationMatrix, DataMatrix)) else np.asarray(m, dtype=float)


def clean_correlation(a):
    """Symmetrize, clip to [-1, 1] and force a unit diagonal."""
    a = np.asarray(a, dtype=float)
    a = 0.5 * (a + a.T)
    np.clip(a, -1.0, 1.0, out=a)
    np.fill_diagonal(a, 1.0)
    return a


def pearson_correlation(data):
    """Sample Pearson correlation of the columns of ``data``.

    Parameters
    ----------
    data : DataMatrix or array_like, shape (T, N)

    Returns
    -------
    CorrelationMatrix
    """
    labels = data.labels if isinstance(data, DataMatrix) else None
    x = as_values(data)
    if x.ndim != 2:
        raise InputError("data must be two-dimensional")
    t, n = x.shape
    if t < 2:
        raise DimensionTooSmall(f"need at least 2 records, got {t}")
    xc = x - x.mean(axis=0)
    ss = np.einsum("ij,ij->j", xc, xc)
    zero = np.flatnonzero((ss == 0) | (np.ptp(x, axis=0) == 0))
    if zero.size:
        raise ZeroVarianceColumn(int(zero[0]), None if labels is None else labels[zero[0]])
    sd = np.sqrt(ss)
    c = (xc.T @ xc) / np.outer(sd, sd)
    return CorrelationMatrix(clean_correlation(c), labels)


def symmetric_eigen(m):
    """Eigendecomposition of a symmetric matrix, eigenvalues in descending order."""
    a = as_values(m)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SymmetricEigen(_frozen(w[::-1]), _frozen(v[:, ::-1]))


def inverse_and_logdet(m, tol=PD_TOL):
    """Inverse and log-determinant of a positive definite matrix.

    Raises NotPositiveDefinite when the smallest eigenvalue is <= ``tol``.
    """
    eig = symmetric_eigen(m)
    w, v = eig.eigenvalues, eig.eigenvectors
    if w[-1] <= tol:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[-1]:.3e} <= {tol:g}")
    inv = (v / w) @ v.T
    inv = 0.5 * (inv + inv.T)
    return inv, float(np.sum(np.log(w)))


def is_positive_definite(m, tol=PD_TOL):
    return bool(symmetric_eigen(m).eigenvalues[-1] > tol)
