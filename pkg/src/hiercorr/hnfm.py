"""Hierarchically nested factor model (HNFM).

One independent unit-variance factor sits on every internal node of a tree.
Element i loads on the factors of its genealogy, and its idiosyncratic
loading ``eta_i`` makes the total variance one.  Choosing each loading as
the square root of the correlation increment over the parent node makes
the model correlation equal to the tree's ultrametric matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError, InvalidMu, UnsupportedNegativeStructure
from .hclust import Dendrogram, Node, genealogy
from .linalg import CorrelationMatrix, DataMatrix

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class HnfmSpec:
    """Factor loadings attached to a dendrogram.

    ``gamma`` maps internal node id to a non-negative loading.  When the root
    correlation is negative, ``root_sign`` holds -1/+1 per leaf and the root
    loading of leaf i is ``root_sign[i] * gamma[root]``.
    """

    dendrogram: Dendrogram
    gamma: dict
    eta: np.ndarray
    root_sign: np.ndarray | None = None
    mu: float | None = None

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float)
        eta.flags.writeable = False
        object.__setattr__(self, "eta", eta)
        if self.root_sign is not None:
            s = np.array(self.root_sign, dtype=float)
            s.flags.writeable = False
            object.__setattr__(self, "root_sign", s)
        if self.mu is not None and not self.mu > 2:
            raise InvalidMu(f"mu must exceed 2, got {self.mu}")
        var = np.sum(self.loadings() ** 2, axis=1) + eta**2
        if np.max(np.abs(var - 1.0)) > 1e-9:
            raise ConfigError("loadings do not give unit variance")

    @property
    def n(self):
        return self.dendrogram.n_leaves

    def factor_ids(self):
        return list(self.dendrogram.internal_ids())

    def loadings(self):
        """N x n_factors matrix of signed loadings (columns follow factor_ids)."""
        d = self.dendrogram
        col = {node: k for k, node in enumerate(self.factor_ids())}
        out = np.zeros((d.n_leaves, len(col)))
        for leaf in range(d.n_leaves):
            for node in genealogy(d, leaf):
                g = self.gamma[node]
                if node == d.root and self.root_sign is not None:
                    g = g * self.root_sign[leaf]
                out[leaf, col[node]] = g
        return out


def _sqrt_increment(x, node):
    if x < 0:
        if x > -UNIT_TOL:
            return 0.0
        raise UnsupportedNegativeStructure(f"node {node} has a correlation below its parent's")
    return float(np.sqrt(x))


def hnfm_from_dendrogram(d, mu=None):
    """Loadings reproducing the filtered matrix of ``d``.

    Supports non-negative trees, and trees whose only negative correlation
    is at the root with ``|rho_root|`` below every other node correlation.
    In the latter case the root's two subtrees get opposite signs.
    """
    root = d.root
    rho_root = d.rho(root)
    gamma = {}
    sign = None
    if rho_root >= 0:
        gamma[root] = float(np.sqrt(rho_root))
    else:
        others = [d.rho(i) for i in d.internal_ids() if i != root]
        if any(r < 0 for r in others):
            raise UnsupportedNegativeStructure("negative correlation below the root")
        if others and abs(rho_root) >= min(others):
            raise UnsupportedNegativeStructure("|rho_root| must be smaller than every other node correlation")
        kids = d.node(root).children
        if len(kids) != 2:
            raise UnsupportedNegativeStructure("negative root needs exactly two subtrees")
        gamma[root] = float(np.sqrt(-rho_root))
        sign = np.ones(d.n_leaves)
        sign[d.leaves(kids[0])] = -1.0
    for i in d.internal_ids():
        if i == root:
            continue
        gamma[i] = _sqrt_increment(d.rho(i) - abs(d.rho(d.parent[i])), i)
    eta = np.empty(d.n_leaves)
    for leaf in range(d.n_leaves):
        total = sum(gamma[node] ** 2 for node in genealogy(d, leaf))
        eta[leaf] = _sqrt_increment(1.0 - total, leaf)
    return HnfmSpec(d, gamma, eta, sign, mu)


def model_correlation(spec):
    lam = spec.loadings()
    c = lam @ lam.T
    np.fill_diagonal(c, 1.0)
    c = 0.5 * (c + c.T)
    return CorrelationMatrix(c, spec.dendrogram.labels)


def _gaussian_rows(spec, t_len, rng):
    if t_len < 2:
        raise InputError("t_len must be >= 2")
    lam = spec.loadings()
    f = rng.standard_normal((t_len, lam.shape[1]))
    eps = rng.standard_normal((t_len, spec.n))
    return f @ lam.T + eps * spec.eta


def simulate_gaussian(spec, t_len, rng):
    """T x N Gaussian sample with population correlation ``model_correlation(spec)``."""
    return DataMatrix(_gaussian_rows(spec, t_len, rng), spec.dendrogram.labels)


def student_scale(mu, size, rng):
    """Row multipliers with unit second moment, so rows stay unit variance.

    ``g ~ Gamma(mu/2)`` and the multiplier is ``sqrt((mu - 2) / (2 g))``; the
    product with a Gaussian vector is multivariate Student-t with ``mu``
    degrees of freedom.
    """
    if not mu > 2:
        raise InvalidMu(f"mu must exceed 2, got {mu}")
    g = rng.gamma(mu / 2.0, size=size)
    return np.sqrt((mu - 2.0) / (2.0 * g))


def simulate_student(spec, t_len, rng, mu=None):
    """Multivariate Student-t sample: one shared scale draw per row."""
    mu = spec.mu if mu is None else mu
    if mu is None:
        raise InvalidMu("no degrees of freedom given")
    scale = student_scale(mu, t_len, rng)
    x = _gaussian_rows(spec, t_len, rng) * scale[:, None]
    return DataMatrix(x, spec.dendrogram.labels)


# -- JSON -------------------------------------------------------------------


def spec_to_dict(spec):
    d = spec.dendrogram
    nodes = []
    for i in d.internal_ids():
        nd = d.node(i)
        nodes.append(
            {
                "id": i,
                "children": list(nd.children),
                "rho": nd.rho,
                "gamma": spec.gamma[i],
                "bootstrap": nd.bootstrap,
            }
        )
    leaves = [
        {
            "id": i,
            "label": d.labels[i],
            "eta": float(spec.eta[i]),
            "root_sign": None if spec.root_sign is None else int(spec.root_sign[i]),
        }
        for i in range(d.n_leaves)
    ]
    return {
        "format": "hiercorr.hnfm/1",
        "n_leaves": d.n_leaves,
        "root": d.root,
        "mu": spec.mu,
        "sign_split": spec.root_sign is not None,
        "leaves": leaves,
        "nodes": nodes,
    }


def spec_from_dict(obj):
    try:
        n = int(obj["n_leaves"])
        leaves = sorted(obj["leaves"], key=lambda x: x["id"])
        nodes = sorted(obj["nodes"], key=lambda x: x["id"])
        tree = Dendrogram(
            n,
            [Node(tuple(x["children"]), float(x["rho"]), x.get("bootstrap")) for x in nodes],
            [x["label"] for x in leaves],
            int(obj["root"]),
        )
        gamma = {int(x["id"]): float(x["gamma"]) for x in nodes}
        eta = [float(x["eta"]) for x in leaves]
        sign = [x["root_sign"] for x in leaves] if obj.get("sign_split") else None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed HNFM JSON: {exc}") from exc
    return HnfmSpec(tree, gamma, eta, sign, obj.get("mu"))


def dump_spec(spec, fp):
    json.dump(spec_to_dict(spec), fp, indent=2, sort_keys=True)
    fp.write("\n")


def load_spec(fp):
    return spec_from_dict(json.load(fp))
