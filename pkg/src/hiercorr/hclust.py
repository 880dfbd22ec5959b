"""Average- and single-linkage clustering on correlation matrices.

Both procedures repeatedly merge the pair of clusters with the largest
entry of a working similarity matrix.  They differ only in how the row of
the merged cluster is recomputed: size-weighted mean (ALCA) or maximum
(SLCA).  The outcome is a rooted tree whose internal nodes carry the merge
correlation, and the ultrametric matrix that tree implies.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import IndexOutOfRange, InputError
from .linalg import FilteredCorrelationMatrix, as_correlation

ALCA = "ALCA"
SLCA = "SLCA"


@dataclass(frozen=True)
class Node:
    children: tuple
    rho: float
    bootstrap: float | None = None


@dataclass(frozen=True)
class Dendrogram:
    """Rooted tree over ``n_leaves`` leaves.

    Leaves are ids ``0..n_leaves-1``; internal node ``k`` of ``nodes`` has id
    ``n_leaves + k``.  Trees built by clustering are binary with ids in merge
    order, so the root is the last node.  Reduced trees may be non-binary.
    """

    n_leaves: int
    nodes: tuple
    labels: tuple
    root: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(self.labels) != self.n_leaves:
            raise InputError("one label per leaf required")
        seen = []
        stack = [self.root]
        while stack:
            i = stack.pop()
            seen.append(i)
            if not self.is_leaf(i):
                stack.extend(self.node(i).children)
        if sorted(seen) != list(range(self.n_leaves + len(self.nodes))):
            raise InputError("every leaf and node must be reachable from the root exactly once")

    # -- navigation -------------------------------------------------------
    @property
    def size(self):
        return self.n_leaves + len(self.nodes)

    def is_leaf(self, i):
        return 0 <= i < self.n_leaves

    def check_index(self, i):
        if not (0 <= i < self.size):
            raise IndexOutOfRange(f"index {i} outside 0..{self.size - 1}")

    def node(self, i):
        if i < self.n_leaves or i >= self.size:
            raise IndexOutOfRange(f"{i} is not an internal node id")
        return self.nodes[i - self.n_leaves]

    def internal_ids(self):
        return range(self.n_leaves, self.size)

    def rho(self, i):
        return self.node(i).rho

    @cached_property
    def parent(self):
        par = [-1] * self.size
        for i in self.internal_ids():
            for c in self.node(i).children:
                par[c] = i
        return tuple(par)

    @cached_property
    def leaf_masks(self):
        """Bitmask of the leaves below every id (leaves included)."""
        masks = [0] * self.size
        for i in range(self.n_leaves):
            masks[i] = 1 << i
        for i in self._postorder():
            if not self.is_leaf(i):
                m = 0
                for c in self.node(i).children:
                    m |= masks[c]
                masks[i] = m
        return tuple(masks)

    def leaves(self, i):
        m = self.leaf_masks[i]
        return [k for k in range(self.n_leaves) if m >> k & 1]

    def _postorder(self):
        out = []
        stack = [(self.root, False)]
        while stack:
            i, done = stack.pop()
            if done or self.is_leaf(i):
                out.append(i)
                continue
            stack.append((i, True))
            for c in reversed(self.node(i).children):
                stack.append((c, False))
        return out

    def leaf_order(self):
        return [i for i in self._postorder() if self.is_leaf(i)]

    def with_support(self, support):
        nodes = [
            Node(nd.children, nd.rho, support.get(self.n_leaves + k, nd.bootstrap))
            for k, nd in enumerate(self.nodes)
        ]
        return Dendrogram(self.n_leaves, nodes, self.labels, self.root)

    def is_binary(self):
        return all(len(nd.children) == 2 for nd in self.nodes)


def _agglomerate(c, linkage):
    """Run the merge loop; returns the tree and the list of merges.

    Each merge is ``(members_h, members_k, value)``.  The working matrix is
    indexed by the smallest original leaf of each cluster, so a row-major
    argmax breaks ties lexicographically on original indices.
    """
    cm = as_correlation(c)
    n = cm.n
    b = np.array(cm.values, dtype=float)
    np.fill_diagonal(b, -np.inf)
    size = np.ones(n)
    members = {i: [i] for i in range(n)}
    node_of = {i: i for i in range(n)}
    filtered = np.eye(n)
    nodes = []
    merges = []
    for _ in range(n - 1):
        flat = int(np.argmax(b))
        h, k = divmod(flat, n)  # h < k, see docstring
        value = float(b[h, k])
        mh, mk = members[h], members[k]
        filtered[np.ix_(mh, mk)] = value
        filtered[np.ix_(mk, mh)] = value
        nodes.append(Node((node_of[h], node_of[k]), value))
        merges.append((list(mh), list(mk), value))
        if linkage == ALCA:
            row = (size[h] * b[h] + size[k] * b[k]) / (size[h] + size[k])
        else:
            row = np.maximum(b[h], b[k])
        b[h, :] = row
        b[:, h] = row
        b[h, h] = -np.inf
        b[k, :] = -np.inf
        b[:, k] = -np.inf
        size[h] += size[k]
        members[h] = sorted(mh + mk)
        del members[k]
        node_of[h] = n + len(nodes) - 1
    tree = Dendrogram(n, nodes, cm.labels, 2 * n - 2)
    return tree, FilteredCorrelationMatrix(filtered, cm.labels, source=linkage), merges


def alca(c):
    """Average linkage cluster analysis.

    Returns ``(Dendrogram, FilteredCorrelationMatrix)``.
    """
    tree, filt, _ = _agglomerate(c, ALCA)
    return tree, filt


def slca(c):
    """Single linkage cluster analysis (max-correlation merge rule)."""
    tree, filt, _ = _agglomerate(c, SLCA)
    return tree, filt


def cluster(c, method):
    method = method.upper()
    if method == ALCA:
        return alca(c)
    if method == SLCA:
        return slca(c)
    raise InputError(f"unknown clustering method {method!r}")


def filtered_from_dendrogram(d, source=""):
    """Ultrametric matrix: entry (i, j) is the rho of the lowest common ancestor."""
    n = d.n_leaves
    out = np.eye(n)
    for i in d.internal_ids():
        nd = d.node(i)
        groups = [d.leaves(ch) for ch in nd.children]
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                out[np.ix_(groups[a], groups[b])] = nd.rho
                out[np.ix_(groups[b], groups[a])] = nd.rho
    return FilteredCorrelationMatrix(out, d.labels, source=source)


def genealogy(d, index):
    """Internal nodes from ``index`` (inclusive when internal) up to the root."""
    d.check_index(index)
    out = []
    i = index if not d.is_leaf(index) else d.parent[index]
    while i != -1:
        out.append(i)
        i = d.parent[i]
    return out


def node_depths(d):
    depth = {d.root: 0}
    stack = [d.root]
    while stack:
        i = stack.pop()
        if d.is_leaf(i):
            continue
        for ch in d.node(i).children:
            depth[ch] = depth[i] + 1
            stack.append(ch)
    return depth


def root_first_labels(d):
    """Map internal node id -> 1-based alpha index, root = 1.

    Nodes are numbered by increasing merge correlation (ties: shallower
    first), the labelling used when trees are drawn root-first.
    """
    depth = node_depths(d)
    order = sorted(d.internal_ids(), key=lambda i: (d.rho(i), depth[i], i))
    return {node: k + 1 for k, node in enumerate(order)}


# -- Newick -----------------------------------------------------------------

_SPECIAL = set("()[]':;, \t\n")


def _quote(label):
    if label and not (set(label) & _SPECIAL):
        return label
    return "'" + label.replace("'", "''") + "'"


def _num(x):
    return format(float(x), ".12g")


def to_newick(d):
    """Serialize as ``(child,child)rho:bootstrap;``.

    Leaves carry their label.  Internal nodes carry the merge correlation as
    node name and, when known, the bootstrap value in the branch-length slot.
    """

    def render(i):
        if d.is_leaf(i):
            return _quote(d.labels[i])
        nd = d.node(i)
        text = "(" + ",".join(render(c) for c in nd.children) + ")" + _num(nd.rho)
        if nd.bootstrap is not None:
            text += ":" + _num(nd.bootstrap)
        return text

    return render(d.root) + ";"


class _NewickParser:
    def __init__(self, text):
        self.s = text.strip()
        self.pos = 0

    def error(self, msg):
        raise InputError(f"newick: {msg} at offset {self.pos}")

    def peek(self):
        while self.pos < len(self.s) and self.s[self.pos].isspace():
            self.pos += 1
        return self.s[self.pos] if self.pos < len(self.s) else ""

    def token(self):
        ch = self.peek()
        if ch == "'":
            self.pos += 1
            out = []
            while True:
                if self.pos >= len(self.s):
                    self.error("unterminated quoted label")
                c = self.s[self.pos]
                if c == "'":
                    if self.s[self.pos + 1 : self.pos + 2] == "'":
                        out.append("'")
                        self.pos += 2
                        continue
                    self.pos += 1
                    return "".join(out)
                out.append(c)
                self.pos += 1
        start = self.pos
        while self.pos < len(self.s) and self.s[self.pos] not in _SPECIAL:
            self.pos += 1
        return self.s[start : self.pos]

    def subtree(self):
        if self.peek() == "(":
            self.pos += 1
            children = [self.subtree()]
            while self.peek() == ",":
                self.pos += 1
                children.append(self.subtree())
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            name = self.token()
            boot = self.branch()
            try:
                rho = float(name)
            except ValueError:
                self.error(f"internal node name {name!r} is not a correlation")
            return ("node", children, rho, boot)
        name = self.token()
        if not name:
            self.error("empty leaf label")
        self.branch()
        return ("leaf", name)

    def branch(self):
        if self.peek() != ":":
            return None
        self.pos += 1
        tok = self.token()
        try:
            return float(tok)
        except ValueError:
            self.error(f"bad branch value {tok!r}")

    def parse(self):
        tree = self.subtree()
        if self.peek() != ";":
            self.error("expected ';'")
        return tree


def from_newick(text):
    """Inverse of :func:`to_newick`.  Leaves are numbered left to right."""
    raw = _NewickParser(text).parse()
    if raw[0] == "leaf":
        raise InputError("newick tree has no internal node")
    labels = []

    def count(t):
        if t[0] == "leaf":
            labels.append(t[1])
        else:
            for ch in t[1]:
                count(ch)

    count(raw)
    n = len(labels)
    nodes = []
    leaf_counter = iter(range(n))

    def build(t):
        if t[0] == "leaf":
            return next(leaf_counter)
        kids = tuple(build(ch) for ch in t[1])
        nodes.append(Node(kids, t[2], t[3]))
        return n + len(nodes) - 1

    root = build(raw)
    return Dendrogram(n, nodes, labels, root)
