"""Stability-information evaluation of correlation filters.

For M bootstrap replicas ``C_i`` of the sample correlation matrix and a
filter F:

* information  y = mean_i K(C_i, F(C_i))
* stability    x = mean_{i<j} K(F(C_i), F(C_j))

An ideal filter sits at ``(0, E[K(C, Sigma)])``.  That reference value
comes either from the Wishart closed form (Gaussian data) or from a
simulate-then-bootstrap protocol (Student-t data).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_replica, replica_rng
from .errors import AlphaOutOfRange, InsufficientReplicas, InsufficientSamples, InvalidMu, NotPositiveDefinite
from .filters import make_filter, shrink
from .hclust import Dendrogram, Node
from .hnfm import hnfm_from_dendrogram, model_correlation, simulate_student
from .kl import GAUSSIAN, KL_MODES, STUDENT_SMALL_MU, KlOperand, estimate_mu, wishart_expectations
from .linalg import as_values, pearson_correlation

log = logging.getLogger(__name__)

ALL_PAIRS_LIMIT = 150
PAIR_SUBSAMPLE = 10_000
FLAT_BAND = 0.01


@dataclass(frozen=True)
class PlanePoint:
    label: str
    x: float
    y: float
    x_err: float
    y_err: float


@dataclass
class EvaluationReport:
    n: int
    t: int
    replicas: int
    seed: int
    kl_mode: str
    pair_rule: str
    reference: dict
    points: list = field(default_factory=list)
    alpha_curve: list = field(default_factory=list)
    alpha_k: float | None = None
    alpha_frobenius: float | None = None
    bootstrap_bias: dict | None = None

    def to_dict(self):
        out = asdict(self)
        out["format"] = "hiercorr.evaluation/1"
        out["alpha_curve"] = [{"alpha": a, **asdict(p)} for a, p in self.alpha_curve]
        return out

    def write_json(self, fp):
        json.dump(self.to_dict(), fp, indent=2, sort_keys=True)
        fp.write("\n")

    def write_csv(self, fp):
        """One row per plane point, then the alpha curve, then the reference point."""
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["series", "label", "alpha", "x", "y", "x_err", "y_err"])
        fmt = lambda v: "" if v is None else format(v, ".12g")  # noqa: E731
        for p in self.points:
            w.writerow(["filter", p.label, "", fmt(p.x), fmt(p.y), fmt(p.x_err), fmt(p.y_err)])
        for a, p in self.alpha_curve:
            w.writerow(["shrinkage", p.label, fmt(a), fmt(p.x), fmt(p.y), fmt(p.x_err), fmt(p.y_err)])
        ref = self.reference
        half = 0.5 * (ref["high"] - ref["low"])
        w.writerow(["reference", "Sigma", "", "0", fmt(ref["value"]), "0", fmt(half)])


# -- sample matrices ----------------------------------------------------------


def _stream(seed, *keys):
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *keys]))


def replica_matrices(data, cfg, estimator=pearson_correlation):
    """Sample matrices of the bootstrap replicas, shape (M, N, N)."""
    out = []
    for r in range(cfg.replicas):
        rep = bootstrap_replica(data, replica_rng(cfg.seed, r))
        out.append(as_values(estimator(rep)))
    return np.array(out)


def stability_pairs(m, seed):
    """All unordered replica pairs when M <= 150, else a seeded sample of 10^4."""
    if m < 2:
        raise InsufficientReplicas("stability needs at least two replicas")
    if m <= ALL_PAIRS_LIMIT:
        i, j = np.triu_indices(m, 1)
        return i, j
    rng = _stream(seed, 0x9A1B)
    i = rng.integers(0, m, PAIR_SUBSAMPLE)
    j = (i + rng.integers(1, m, PAIR_SUBSAMPLE)) % m
    return i, j


def pair_rule(m):
    if m <= ALL_PAIRS_LIMIT:
        return f"all {m * (m - 1) // 2} unordered replica pairs"
    return f"seeded subsample of {PAIR_SUBSAMPLE} replica pairs out of {m * (m - 1) // 2}"


class _Stack:
    """Matrices with inverses and log-determinants, flattened for batch traces."""

    def __init__(self, mats, what):
        self.values = np.asarray(mats)
        m, n, _ = self.values.shape
        self.n = n
        inv = np.empty_like(self.values)
        ld = np.empty(m)
        for k in range(m):
            try:
                op = KlOperand(self.values[k])
            except NotPositiveDefinite as exc:
                raise NotPositiveDefinite(f"{what}, replica {k}: {exc}") from exc
            inv[k], ld[k] = op.inverse, op.logdet
        self.inverse = inv
        self.logdet = ld
        self.flat = self.values.reshape(m, -1)
        self.inv_flat = inv.reshape(m, -1)


def _kl_parts(ld_a, ld_b, tr, n, mode):
    if mode == GAUSSIAN:
        k = 0.5 * (ld_b - ld_a + tr - n)
    elif mode == STUDENT_SMALL_MU:
        k = 0.5 * (ld_b - ld_a + n * np.log(tr / n))
    else:
        raise ValueError(f"unknown KL mode {mode!r}")
    return np.maximum(k, 0.0)


def _mean_err(v):
    v = np.asarray(v, dtype=float)
    err = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), err


def plane_point(label, samples, filtered, kl_mode, pairs, sample_stack=None):
    """Stability/information coordinates of one filter on a replica set."""
    s = sample_stack if sample_stack is not None else _Stack(samples, "sample matrix")
    f = _Stack(filtered, f"filter {label}")
    n = s.n
    tr_info = np.einsum("ij,ij->i", f.inv_flat, s.flat)
    info = _kl_parts(s.logdet, f.logdet, tr_info, n, kl_mode)
    same = np.array([np.array_equal(a, b) for a, b in zip(s.values, f.values)])
    info[same] = 0.0
    i, j = pairs
    tr_pair = np.einsum("kj,kj->k", f.inv_flat[j], f.flat[i])
    stab = _kl_parts(f.logdet[i], f.logdet[j], tr_pair, n, kl_mode)
    x, x_err = _mean_err(stab)
    y, y_err = _mean_err(info)
    return PlanePoint(label, x, y, x_err, y_err)


def _resolve_filters(filters, t_len):
    if isinstance(filters, dict):
        return filters
    return {name: make_filter(name, t_len) for name in filters}


def choose_kl_mode(data):
    """Student small-mu distance when the fitted tail index is small relative to N."""
    mu_mean, _ = estimate_mu(data)
    n = as_values(data).shape[1]
    return STUDENT_SMALL_MU if mu_mean / n < 0.5 else GAUSSIAN


def _reference(n, t, kl_mode, reference):
    if reference is not None:
        if isinstance(reference, dict):
            return reference
        value, (low, high) = reference if isinstance(reference, tuple) else (reference, (reference, reference))
        return {"value": float(value), "low": float(low), "high": float(high), "source": "given"}
    e = wishart_expectations(n, t).e_c_sigma
    return {"value": e, "low": e, "high": e, "source": "wishart"}


def evaluate_filters(
    data,
    filters,
    cfg,
    kl_mode=None,
    reference=None,
    samples=None,
    estimator=pearson_correlation,
):
    """Place each filter in the stability-information plane.

    ``filters`` is a list of names understood by :func:`make_filter` or a
    dict label -> callable.  ``samples`` overrides the bootstrap replicas
    with caller-supplied sample matrices (e.g. independent simulations).
    ``reference`` is a value, ``(value, (low, high))`` or a dict; by default
    the Wishart expectation of ``K(C, Sigma)`` is used.
    """
    x = as_values(data)
    t, n = x.shape
    if t <= n + 1:
        raise InsufficientSamples(f"need T > N + 1, got N={n}, T={t}")
    if kl_mode is None:
        kl_mode = choose_kl_mode(data)
    if kl_mode not in KL_MODES:
        raise ValueError(f"unknown KL mode {kl_mode!r}")
    if samples is None:
        samples = replica_matrices(data, cfg, estimator)
    samples = np.asarray(samples)
    m = samples.shape[0]
    pairs = stability_pairs(m, cfg.seed)
    stack = _Stack(samples, "sample matrix")
    points = []
    for label, fn in _resolve_filters(filters, t).items():
        filtered = np.array([as_values(fn(c)) for c in samples])
        points.append(plane_point(label, samples, filtered, kl_mode, pairs, stack))
    return EvaluationReport(
        n=n,
        t=t,
        replicas=m,
        seed=cfg.seed,
        kl_mode=kl_mode,
        pair_rule=pair_rule(m),
        reference=_reference(n, t, kl_mode, reference),
        points=points,
    )


def _flat_argmin(grid, objective):
    """Smallest grid value whose objective is within 1% of the minimum."""
    objective = np.asarray(objective, dtype=float)
    best = objective.min()
    ok = objective <= best + FLAT_BAND * abs(best)
    return float(min(g for g, flag in zip(grid, ok) if flag))


def _check_grid(grid):
    grid = [float(a) for a in grid]
    if not grid:
        raise ValueError("empty alpha grid")
    for a in grid:
        if not 0.0 <= a <= 1.0:
            raise AlphaOutOfRange(f"alpha={a} outside [0, 1]")
    return sorted(grid)


def shrinkage_sweep(data, grid, cfg, kl_mode=GAUSSIAN, reference=None, samples=None):
    """Shrinkage curve in the plane and the alpha closest to the ideal point.

    Returns ``(curve, alpha_k)`` where ``curve`` is a list of
    ``(alpha, PlanePoint)``.
    """
    grid = _check_grid(grid)
    x = as_values(data)
    t, n = x.shape
    ref = _reference(n, t, kl_mode, reference)["value"]
    if samples is None:
        samples = replica_matrices(data, cfg)
    samples = np.asarray(samples)
    pairs = stability_pairs(samples.shape[0], cfg.seed)
    stack = _Stack(samples, "sample matrix")
    curve = []
    for a in grid:
        filtered = np.array([shrink(c, a).values for c in samples])
        curve.append((a, plane_point(f"shrink:{a:g}", samples, filtered, kl_mode, pairs, stack)))
    dist = [math.hypot(p.x, p.y - ref) for _, p in curve]
    return curve, _flat_argmin(grid, dist)


def frobenius_objective(samples, grid, seed=0):
    """Mean squared elementwise distance between shrink(C_i, alpha) and C_j, j != i."""
    samples = np.asarray(samples)
    m, n, _ = samples.shape
    if m < 2:
        raise InsufficientReplicas("Frobenius alpha needs at least two replicas")
    i, j = stability_pairs(m, seed)
    i, j = np.concatenate([i, j]), np.concatenate([j, i])  # both orientations
    c = samples.reshape(m, -1)
    means = (samples.sum(axis=(1, 2)) - n) / (n * (n - 1))
    target = np.repeat(means[:, None], n * n, axis=1)
    target[:, :: n + 1] = 1.0
    dvec = target - c
    dd = np.einsum("ij,ij->i", dvec, dvec)
    g = c @ c.T
    h = dvec @ c.T
    cross = h[i, i] - h[i, j]
    sq = g[i, i] + g[j, j] - 2 * g[i, j]
    out = []
    for a in grid:
        out.append(float(np.mean(a * a * dd[i] + 2 * a * cross + sq)) / (n * n))
    return out


def frobenius_optimal_alpha(data, grid, cfg=None, samples=None):
    grid = _check_grid(grid)
    cfg = cfg or BootstrapConfig(replicas=100)
    if samples is None:
        if cfg.replicas < 2:
            raise InsufficientReplicas("Frobenius alpha needs at least two replicas")
        samples = replica_matrices(data, cfg)
    return _flat_argmin(grid, frobenius_objective(samples, grid, cfg.seed))


# -- Student-t reference point --------------------------------------------------


def independent_spec(n, labels=None):
    """HNFM with no common factor (identity correlation), the default simulation model."""
    labels = labels or [f"x{i + 1}" for i in range(n)]
    nodes = [Node((0, 1), 0.0)]
    for k in range(2, n):
        nodes.append(Node((n + k - 2, k), 0.0))
    return hnfm_from_dendrogram(Dendrogram(n, nodes, labels, 2 * n - 2))


def student_runs(
    n, t, mu, cfg, sims=100, boots=100, spec=None, kl_mode=STUDENT_SMALL_MU, estimator=pearson_correlation
):
    """Per-simulation arrays ``(boot, indep)``.

    ``boot[j]`` is the mean of ``K(C^b_ji, C_j)`` over the bootstrap replicas
    of simulation j and ``indep[j]`` is ``K(C_j, Sigma)``.
    """
    if not mu > 2:
        raise InvalidMu(f"mu must exceed 2, got {mu}")
    spec = spec or independent_spec(n)
    sigma = KlOperand(model_correlation(spec).values)
    boot_means = np.empty(sims)
    indep = np.empty(sims)
    for j in range(sims):
        x = simulate_student(spec, t, _stream(cfg.seed, 1, j), mu=mu)
        cj = as_values(estimator(x))
        opj = KlOperand(cj)
        indep[j] = _kl_one(opj, sigma, kl_mode)
        rng = _stream(cfg.seed, 2, j)
        vals = np.empty(boots)
        for i in range(boots):
            cb = as_values(estimator(bootstrap_replica(x, rng)))
            vals[i] = _kl_one(KlOperand(cb), opj, kl_mode)
        boot_means[j] = vals.mean()
    return boot_means, indep


def _kl_one(a, b, mode):
    tr = float(np.sum(b.inverse * a.values))
    return float(_kl_parts(a.logdet, b.logdet, tr, a.n, mode))


def student_reference(
    n, t, mu, cfg, mu_std=None, sims=100, boots=100, spec=None, kl_mode=STUDENT_SMALL_MU, estimator=pearson_correlation
):
    """Bootstrap-based estimate of E[K(C, Sigma)] for Student-t data.

    Simulates ``sims`` series from ``spec`` (default: independent columns),
    bootstraps each ``boots`` times and averages ``K(C^b_ji, C_j)``.  With
    ``mu_std`` the error bar is the value at ``mu - mu_std`` (top) and
    ``mu + mu_std`` (bottom).  ``estimator`` maps a data sample to its
    sample matrix; the Wishart closed forms hold for ``second_moment_matrix``.
    """
    runs = lambda m: student_runs(n, t, m, cfg, sims, boots, spec, kl_mode, estimator)  # noqa: E731
    value = float(runs(mu)[0].mean())
    if mu_std is None or mu_std == 0:
        return value, (value, value)
    lo_mu = mu - mu_std
    if lo_mu <= 2.0:
        log.warning("mu - mu_std = %.3g <= 2; top of error bar evaluated at mu = 2.1", lo_mu)
        lo_mu = 2.1
    high = float(runs(lo_mu)[0].mean())
    low = float(runs(mu + mu_std)[0].mean())
    return value, (low, high)


def bootstrap_bias(
    n, t, mu, cfg, sims=100, boots=100, spec=None, kl_mode=STUDENT_SMALL_MU, estimator=pearson_correlation
):
    """Relative bias of the bootstrap reference against independent simulations.

    Returns ``(bias, err)`` with ``bias = mean K(C^b, C) / mean K(C, Sigma) - 1``
    and a delta-method standard error over simulations.
    """
    boot, indep = student_runs(n, t, mu, cfg, sims, boots, spec, kl_mode, estimator)
    b, s = boot.mean(), indep.mean()
    ratio = b / s
    resid = boot - ratio * indep
    err = float(resid.std(ddof=1) / math.sqrt(sims) / s) if sims > 1 else float("nan")
    return float(ratio - 1.0), err


def student_reference_dict(n, t, mu, cfg, mu_std=None, sims=100, boots=100):
    value, (low, high) = student_reference(n, t, mu, cfg, mu_std, sims, boots)
    return {"value": value, "low": low, "high": high, "source": f"student-bootstrap mu={mu:.4g}"}


def full_report(data, filters, grid, cfg, kl_mode=None, reference=None, sims=100, boots=100):
    """Filters, shrinkage curve, alpha_K and Frobenius alpha on one replica set."""
    x = as_values(data)
    t, n = x.shape
    mu_info = None
    if kl_mode is None or (reference is None and kl_mode == STUDENT_SMALL_MU):
        mu_info = estimate_mu(data)
    if kl_mode is None:
        kl_mode = STUDENT_SMALL_MU if mu_info[0] / n < 0.5 else GAUSSIAN
    if reference is None and kl_mode == STUDENT_SMALL_MU:
        reference = student_reference_dict(n, t, mu_info[0], cfg, mu_info[1], sims, boots)
    samples = replica_matrices(data, cfg)
    report = evaluate_filters(data, filters, cfg, kl_mode, reference, samples=samples)
    if grid:
        report.alpha_curve, report.alpha_k = shrinkage_sweep(
            data, grid, cfg, kl_mode, report.reference, samples=samples
        )
        report.alpha_frobenius = frobenius_optimal_alpha(data, grid, cfg, samples=samples)
    return report
