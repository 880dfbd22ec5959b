"""Row-resampling bootstrap for dendrogram nodes and graph links."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateReplica
from .hclust import Dendrogram, Node, cluster
from .linalg import DataMatrix, as_values, pearson_correlation
from .networks import build_graph

MAX_RETRIES = 100


@dataclass(frozen=True)
class BootstrapConfig:
    replicas: int = 1000
    seed: int = 0
    threshold: float = 0.70

    def __post_init__(self):
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")


def replica_rng(seed, index):
    """Independent generator for replica ``index``; order of evaluation is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)]))


def bootstrap_replica(data, rng):
    """Draw T rows with replacement.  Retries when a column comes out constant."""
    x = as_values(data)
    t = x.shape[0]
    for _ in range(MAX_RETRIES):
        rows = rng.integers(0, t, size=t)
        sample = x[rows]
        if not np.any(np.ptp(sample, axis=0) == 0):
            if isinstance(data, DataMatrix):
                return DataMatrix(sample, data.labels)
            return sample
    raise DegenerateReplica(f"no replica with non-constant columns after {MAX_RETRIES} draws")


def replicas(data, cfg):
    """Yield ``(index, replica)`` for every replica in ``cfg``."""
    for r in range(cfg.replicas):
        yield r, bootstrap_replica(data, replica_rng(cfg.seed, r))


def node_bootstrap_values(data, method, cfg):
    """Fraction of replicas whose tree contains each node's exact leaf set.

    Returns a dict mapping internal node ids of the original-data tree to
    bootstrap values.
    """
    tree, _ = cluster(pearson_correlation(data), method)
    wanted = {i: tree.leaf_masks[i] for i in tree.internal_ids()}
    counts = dict.fromkeys(wanted, 0)
    for _, rep in replicas(data, cfg):
        rtree, _ = cluster(pearson_correlation(rep), method)
        present = {rtree.leaf_masks[i] for i in rtree.internal_ids()}
        for node, mask in wanted.items():
            if mask in present:
                counts[node] += 1
    return {node: counts[node] / cfg.replicas for node in wanted}


def link_bootstrap_values(data, kind, cfg):
    """Fraction of replicas whose graph contains each link of the original graph."""
    graph = build_graph(pearson_correlation(data), kind)
    counts = dict.fromkeys(graph.edge_keys(), 0)
    for _, rep in replicas(data, cfg):
        present = build_graph(pearson_correlation(rep), kind).edge_keys()
        for key in counts:
            if key in present:
                counts[key] += 1
    return {key: c / cfg.replicas for key, c in counts.items()}


def reduce_dendrogram(d, support, b):
    """Collapse nodes with support below ``b`` into their closest surviving ancestor.

    The root always survives.  Surviving nodes keep their merge correlation;
    the result is generally not binary.
    """
    keep = {i for i in d.internal_ids() if support[i] >= b}
    keep.add(d.root)

    def kids(i):
        out = []
        for c in d.node(i).children:
            if d.is_leaf(c) or c in keep:
                out.append(c)
            else:
                out.extend(kids(c))
        return out

    n = d.n_leaves
    survivors = [i for i in d.internal_ids() if i in keep]  # root stays last
    new_id = {old: n + k for k, old in enumerate(survivors)}
    remap = lambda c: c if d.is_leaf(c) else new_id[c]  # noqa: E731
    nodes = [
        Node(tuple(remap(c) for c in kids(old)), d.node(old).rho, support.get(old, d.node(old).bootstrap))
        for old in survivors
    ]
    return Dendrogram(n, nodes, d.labels, new_id[d.root])
