"""Synthetic HNFM specifications used for filter evaluation."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .hclust import Dendrogram, Node
from .hnfm import hnfm_from_dendrogram


def _split(n, parts):
    base, extra = divmod(n, parts)
    return [base + (k < extra) for k in range(parts)]


def _labels(n):
    return [f"x{i + 1}" for i in range(n)]


def block_spec(n=100, groups=12, intra=(0.4, 0.5), seed=0, mu=None):
    """Block-diagonal model: zero correlation between groups, one factor per group.

    Intra-group correlations are drawn uniformly from ``intra``.
    """
    if groups < 1 or groups > n:
        raise ConfigError(f"need 1 <= groups <= n, got groups={groups}, n={n}")
    rng = np.random.default_rng(seed)
    nodes = []
    tops = []
    start = 0
    for size in _split(n, groups):
        members = tuple(range(start, start + size))
        start += size
        if size == 1:
            tops.append(members[0])
            continue
        nodes.append(Node(members, float(rng.uniform(*intra))))
        tops.append(n + len(nodes) - 1)
    nodes.append(Node(tuple(tops), 0.0))
    tree = Dendrogram(n, nodes, _labels(n), n + len(nodes) - 1)
    return hnfm_from_dendrogram(tree, mu)


def nested_spec(n=100, sectors=10, market=0.2, seed=0, mu=None):
    """Market-like nested model: a market factor, sector factors and sub-sector factors.

    Sectors with six or more members carry a nested sub-sector, sectors
    with nine or more a second one; the default size has 31 factors.
    """
    if sectors < 1 or sectors > n:
        raise ConfigError(f"need 1 <= sectors <= n, got sectors={sectors}, n={n}")
    rng = np.random.default_rng(seed)
    nodes = []
    tops = []
    start = 0

    def add(children, rho):
        nodes.append(Node(tuple(children), float(rho)))
        return n + len(nodes) - 1

    for size in _split(n, sectors):
        members = list(range(start, start + size))
        start += size
        if size == 1:
            tops.append(members[0])
            continue
        rho_sector = rng.uniform(market + 0.1, market + 0.3)
        children = members
        if size >= 6:
            cut = max(2, size // 3)
            sub = members[:cut]
            children = [add(sub, rng.uniform(rho_sector + 0.15, rho_sector + 0.3))] + members[cut:]
            if size >= 9:
                sub2 = members[cut : 2 * cut]
                children = [children[0], add(sub2, rng.uniform(rho_sector + 0.1, rho_sector + 0.25))]
                children += members[2 * cut :]
        tops.append(add(children, rho_sector))
    add(tops, market)
    tree = Dendrogram(n, nodes, _labels(n), n + len(nodes) - 1)
    return hnfm_from_dendrogram(tree, mu)
