"""Correlation-based graphs: MST, ALMST and PMFG.

MST and ALMST come out of the same merge loop as SLCA and ALCA.  At every
merge the link added to the tree joins the most correlated pair of elements
across the two merging components.  PMFG inserts links in descending
correlation order, keeping only those that leave the graph planar.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import InputError
from .hclust import ALCA, SLCA, _agglomerate
from .linalg import as_correlation

MST = "MST"
ALMST = "ALMST"
PMFG = "PMFG"
KINDS = (MST, ALMST, PMFG)


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    weight: float
    bootstrap: float | None = None

    @property
    def key(self):
        return (self.i, self.j) if self.i < self.j else (self.j, self.i)


@dataclass(frozen=True)
class CorrelationGraph:
    n: int
    edges: tuple
    kind: str
    labels: tuple

    def edge_keys(self):
        return {e.key for e in self.edges}

    def with_support(self, support):
        edges = tuple(Edge(e.i, e.j, e.weight, support.get(e.key, e.bootstrap)) for e in self.edges)
        return CorrelationGraph(self.n, edges, self.kind, self.labels)

    def to_networkx(self):
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        for e in self.edges:
            g.add_edge(e.i, e.j, weight=e.weight)
        return g


def _tree_from_merges(c, linkage, kind):
    cm = as_correlation(c)
    _, filt, merges = _agglomerate(cm, linkage)
    v = cm.values
    edges = []
    for mh, mk, _ in merges:
        block = v[np.ix_(mh, mk)]
        a, b = divmod(int(np.argmax(block)), len(mk))
        u, p = mh[a], mk[b]
        if u > p:
            u, p = p, u
        edges.append(Edge(u, p, float(v[u, p])))
    return CorrelationGraph(cm.n, tuple(edges), kind, cm.labels), filt


def mst(c):
    """Maximum-correlation spanning tree and its companion SLCA matrix."""
    return _tree_from_merges(c, SLCA, MST)


def almst(c):
    """Average linkage minimum spanning tree and its companion ALCA matrix."""
    return _tree_from_merges(c, ALCA, ALMST)


def is_planar_with(edges, candidate):
    """True iff the edge set plus ``candidate`` is planar."""
    g = nx.Graph(list(edges))
    g.add_edge(*candidate)
    return nx.check_planarity(g)[0]


def sorted_pairs(values):
    """All pairs i < j by descending correlation; ties by (i, j)."""
    n = values.shape[0]
    iu, ju = np.triu_indices(n, 1)
    w = values[iu, ju]
    order = np.lexsort((ju, iu, -w))
    return [(int(iu[k]), int(ju[k]), float(w[k])) for k in order]


def pmfg(c):
    """Planar maximally filtered graph with ``3(n-2)`` links."""
    cm = as_correlation(c)
    n = cm.n
    if n < 3:
        raise InputError("PMFG needs at least 3 elements")
    target = 3 * (n - 2)
    g = nx.Graph()
    g.add_nodes_from(range(n))
    # union-find: a link between two components cannot break planarity
    root = list(range(n))

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    edges = []
    for i, j, w in sorted_pairs(cm.values):
        ri, rj = find(i), find(j)
        g.add_edge(i, j)
        if ri != rj:
            root[ri] = rj
        elif not nx.check_planarity(g)[0]:
            g.remove_edge(i, j)
            continue
        edges.append(Edge(i, j, w))
        if len(edges) == target:
            break
    return CorrelationGraph(n, tuple(edges), PMFG, cm.labels)


def build_graph(c, kind):
    kind = kind.upper()
    if kind == MST:
        return mst(c)[0]
    if kind == ALMST:
        return almst(c)[0]
    if kind == PMFG:
        return pmfg(c)
    raise InputError(f"unknown graph kind {kind!r}")
