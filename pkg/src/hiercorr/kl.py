"""Kullback-Leibler distances between correlation structures.

All distances take two positive definite correlation matrices and are
asymmetric: ``K(S1, S2)`` integrates against the law with correlation S1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .errors import (
    DimensionMismatch,
    InsufficientSamples,
    InvalidMu,
    MleFailure,
    NoConvergence,
    NotPositiveDefinite,
    QuadratureFailure,
)
from .linalg import CorrelationMatrix, DataMatrix, as_values, clean_correlation, inverse_and_logdet

log = logging.getLogger(__name__)

GAUSSIAN = "gaussian"
STUDENT_SMALL_MU = "student_small_mu"
KL_MODES = (GAUSSIAN, STUDENT_SMALL_MU)


@dataclass(frozen=True)
class StudentParams:
    mu: float

    def __post_init__(self):
        if not self.mu > 2:
            raise InvalidMu(f"mu must exceed 2, got {self.mu}")

    @property
    def s0_sq(self):
        """Scale of the mixing density that gives the multiplier unit second moment."""
        return (self.mu - 2.0) / 2.0


@dataclass(frozen=True)
class KlReference:
    n: int
    t: int
    e_sigma_c: float
    e_c_sigma: float
    e_c_c: float

    def to_dict(self):
        return {"n": self.n, "t": self.t, "e_sigma_c": self.e_sigma_c, "e_c_sigma": self.e_c_sigma, "e_c_c": self.e_c_c}


class KlOperand:
    """A matrix with its inverse and log-determinant cached."""

    __slots__ = ("values", "inverse", "logdet")

    def __init__(self, m):
        self.values = as_values(m)
        self.inverse, self.logdet = inverse_and_logdet(self.values)

    @property
    def n(self):
        return self.values.shape[0]


def _operand(m):
    return m if isinstance(m, KlOperand) else KlOperand(m)


def _pair(s1, s2):
    a, b = _operand(s1), _operand(s2)
    if a.n != b.n:
        raise DimensionMismatch(f"{a.n}x{a.n} vs {b.n}x{b.n}")
    # tr(B^-1 A) for symmetric A, B^-1
    tr = float(np.sum(b.inverse * a.values))
    return a, b, tr


def kl_gaussian(s1, s2):
    """``0.5 * [log(|S2|/|S1|) + tr(S2^-1 S1) - N]``."""
    a, b, tr = _pair(s1, s2)
    return 0.5 * (b.logdet - a.logdet + tr - a.n)


def kl_student_small_mu(s1, s2):
    """Student-t distance in the limit mu/N -> 0:
    ``0.5 * [log(|S2|/|S1|) + N log(tr(S2^-1 S1) / N)]``."""
    a, b, tr = _pair(s1, s2)
    return 0.5 * (b.logdet - a.logdet + a.n * math.log(tr / a.n))


def kl_student_full(s1, s2, mu, rtol=1e-6):
    """Student-t distance for finite ``mu``.

    The mixing expectation is taken over ``g ~ Gamma(mu/2, 1)``:
    ``(N + mu) E[log((1 + tr/(2g)) / (1 + N/(2g)))]``.  The integrand is
    bounded and monotone in g, so it is integrated in probability space
    (``g = F^-1(q)``) to stay well conditioned for very small and very
    large ``mu``.
    """
    mu = float(mu.mu if isinstance(mu, StudentParams) else mu)
    if not mu > 0:
        raise InvalidMu(f"mu must be positive, got {mu}")
    a, b, tr = _pair(s1, s2)
    n = a.n
    shape = mu / 2.0
    if abs(tr - n) <= 1e-13 * n:
        mix = 0.0
    else:

        def f(q):
            g = special.gammaincinv(shape, q)
            if g <= 0.0:
                return math.log(tr / n)
            return math.log1p(tr / (2 * g)) - math.log1p(n / (2 * g))

        mix, err = integrate.quad(f, 0.0, 1.0, epsabs=1e-15, epsrel=1e-10, limit=500)
        if err > rtol * abs(mix) + 1e-15:
            raise QuadratureFailure(f"error estimate {err:.2e} above target for mu={mu}")
    return 0.5 * (b.logdet - a.logdet + (n + mu) * mix)


def kl(s1, s2, mode=GAUSSIAN):
    if mode == GAUSSIAN:
        return kl_gaussian(s1, s2)
    if mode == STUDENT_SMALL_MU:
        return kl_student_small_mu(s1, s2)
    raise ValueError(f"unknown KL mode {mode!r}")


def _digamma_sum(n, t):
    p = np.arange(t - n + 1, t + 1)
    return float(np.sum(special.digamma(p / 2.0)))


def wishart_expectations(n, t):
    """Model-independent expected distances for Wishart sample matrices.

    Exact for ``C = X^T X / T`` built from T zero-mean Gaussian records.
    """
    if t <= n + 1:
        raise InsufficientSamples(f"need T > N + 1, got N={n}, T={t}")
    psi = _digamma_sum(n, t)
    extra = n * (n + 1) / (t - n - 1)
    return KlReference(
        n=n,
        t=t,
        e_sigma_c=0.5 * (n * math.log(2.0 / t) + psi + extra),
        e_c_sigma=0.5 * (n * math.log(t / 2.0) - psi),
        e_c_c=0.5 * extra,
    )


def second_moment_matrix(data):
    """``X^T X / T`` without centering or normalization (the Wishart estimator)."""
    x = as_values(data)
    return x.T @ x / x.shape[0]


def student_mle(data, p, tol=1e-8, max_iter=500):
    """Student-t maximum likelihood scatter by fixed-point iteration.

    Iterates ``C <- (N + mu)/T * sum_t x x^T / (mu + x^T C^-1 x)`` on
    column-centered data, starting from the sample covariance.  Once the
    step size grows, updates are damped by averaging with the previous
    iterate.  Returns ``(CorrelationMatrix, iterations)``; the correlation
    is the converged scatter matrix rescaled to unit diagonal.
    """
    mu = p.mu if isinstance(p, StudentParams) else StudentParams(p).mu
    labels = data.labels if isinstance(data, DataMatrix) else None
    x = as_values(data)
    t, n = x.shape
    if n == 1:
        return CorrelationMatrix(np.ones((1, 1)), labels), 0
    if t <= n:
        raise InsufficientSamples(f"need T > N, got N={n}, T={t}")
    x = x - x.mean(axis=0)
    c = x.T @ x / t
    prev_step = np.inf
    damp = False
    step = np.inf
    for it in range(1, max_iter + 1):
        try:
            inv, _ = inverse_and_logdet(c)
        except NotPositiveDefinite as exc:
            raise NotPositiveDefinite(f"iterate {it} lost definiteness: {exc}") from exc
        q = np.einsum("ti,ij,tj->t", x, inv, x)
        w = (n + mu) / (mu + q)
        new = (x * w[:, None]).T @ x / t
        if damp:
            new = 0.5 * (new + c)
        new = 0.5 * (new + new.T)
        step = float(np.max(np.abs(new - c)) / np.max(np.diag(new)))
        c = new
        if step < tol:
            d = np.sqrt(np.diag(c))
            return CorrelationMatrix(clean_correlation(c / np.outer(d, d)), labels), it
        if step > prev_step:
            damp = True
        prev_step = step
    raise NoConvergence(f"no fixed point within {max_iter} iterations (last step {step:.2e})")


def student_mle_correlation(data, p, tol=1e-8, max_iter=500):
    """Student-t maximum likelihood correlation matrix (see :func:`student_mle`)."""
    return student_mle(data, p, tol, max_iter)[0]


def estimate_mu(data):
    """Per-column Student-t MLE of the degrees of freedom; returns (mean, std)."""
    labels = data.labels if isinstance(data, DataMatrix) else None
    x = as_values(data)
    mus = []
    for j in range(x.shape[1]):
        col = x[:, j]
        name = j if labels is None else labels[j]
        if np.ptp(col) == 0:
            raise MleFailure(f"column {name} is constant", column=name)
        try:
            df, _, _ = stats.t.fit(col)
        except Exception as exc:  # scipy raises a range of optimizer errors
            raise MleFailure(f"column {name}: {exc}", column=name) from exc
        if not np.isfinite(df) or df <= 0:
            raise MleFailure(f"column {name}: degenerate estimate {df}", column=name)
        mus.append(df)
    mus = np.array(mus)
    return float(mus.mean()), float(mus.std(ddof=1)) if len(mus) > 1 else 0.0
