"""Correlation filters sharing one contract: CorrelationMatrix -> CorrelationMatrix."""

from __future__ import annotations

import logging
import math

import numpy as np

from .errors import AlphaOutOfRange, ConfigError, QBelowOne
from .hclust import cluster
from .linalg import CorrelationMatrix, as_correlation, symmetric_eigen

log = logging.getLogger(__name__)


def shrinkage_target(c):
    """Unit diagonal, every off-diagonal equal to the mean off-diagonal of ``c``."""
    c = as_correlation(c)
    n = c.n
    mean = (c.values.sum() - n) / (n * (n - 1))
    t = np.full((n, n), mean)
    np.fill_diagonal(t, 1.0)
    return CorrelationMatrix(t, c.labels)


def shrink(c, alpha):
    """``alpha * target + (1 - alpha) * c``."""
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha={alpha} outside [0, 1]")
    c = as_correlation(c)
    out = alpha * shrinkage_target(c).values + (1.0 - alpha) * c.values
    np.fill_diagonal(out, 1.0)
    return CorrelationMatrix(out, c.labels)


def rmt_lambda_max(n, t_len, lambda1=None):
    """Upper edge of the noise band for a correlation matrix from ``t_len`` records.

    With ``lambda1`` given, the noise variance is reduced to ``1 - lambda1/n``
    (one-factor null).
    """
    q = t_len / n
    if q < 1:
        raise QBelowOne(f"T/N = {q:.3g} < 1")
    sigma2 = 1.0 if lambda1 is None else 1.0 - lambda1 / n
    return sigma2 * (1.0 + 1.0 / q + 2.0 * math.sqrt(1.0 / q))


def rmt_clean(c, t_len):
    """Spectral cleaning; returns ``(filtered, H)`` with H the trace-preserving
    intermediate before renormalization."""
    c = as_correlation(c)
    eig = symmetric_eigen(c)
    w = np.array(eig.eigenvalues)
    v = eig.eigenvectors
    lam_max = rmt_lambda_max(c.n, t_len, w[0])
    noise = w < lam_max
    if noise.any():
        w[noise] = w[noise].mean()
    h = (v * w) @ v.T
    h = 0.5 * (h + h.T)
    d = np.sqrt(np.diag(h))
    out = h / np.outer(d, d)
    if np.any(np.abs(out) > 1.0):
        log.info("rmt_filter: clamping %d entries to [-1, 1]", int(np.sum(np.abs(out) > 1.0)))
    out = np.clip(out, -1.0, 1.0)
    np.fill_diagonal(out, 1.0)
    return CorrelationMatrix(out, c.labels), h


def rmt_filter(c, t_len):
    """Replace eigenvalues below the one-factor-adjusted noise edge by their mean."""
    return rmt_clean(c, t_len)[0]


def hierarchical_filter(c, method):
    return cluster(c, method)[1]


def make_filter(name, t_len=None):
    """Filter factory for the names ``slca``, ``alca``, ``rmt``, ``shrink:<alpha>`` and ``identity``."""
    key = name.lower()
    if key in ("slca", "alca"):
        return lambda c: hierarchical_filter(c, key)
    if key == "rmt":
        if t_len is None:
            raise ConfigError("rmt filter needs the series length")
        return lambda c: rmt_filter(c, t_len)
    if key.startswith("shrink:"):
        alpha = float(key.split(":", 1)[1])
        if not 0.0 <= alpha <= 1.0:
            raise AlphaOutOfRange(f"alpha={alpha} outside [0, 1]")
        return lambda c: shrink(c, alpha)
    if key == "identity":
        return as_correlation
    raise ConfigError(f"unknown filter {name!r}")
