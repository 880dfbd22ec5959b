import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import cophenet, linkage
from scipy.spatial.distance import squareform

from hiercorr.errors import IndexOutOfRange, InputError
from hiercorr.hclust import (
    Dendrogram,
    Node,
    alca,
    cluster,
    filtered_from_dendrogram,
    from_newick,
    genealogy,
    root_first_labels,
    slca,
    to_newick,
)

from conftest import random_correlation


def scipy_filtered(c, method):
    """Ultrametric from scipy's linkage on the distance 1 - rho (independent oracle)."""
    z = linkage(squareform(1.0 - c, checks=False), method=method)
    return 1.0 - squareform(cophenet(z))


def test_fixture_alca_and_slca(sample10, alca10_expected, slca10_expected):
    np.testing.assert_allclose(alca(sample10)[1].values, alca10_expected.values, atol=1e-3)
    np.testing.assert_allclose(slca(sample10)[1].values, slca10_expected.values, atol=1e-3)


@pytest.mark.parametrize("method,scipy_method", [("alca", "average"), ("slca", "single")])
def test_matches_scipy_linkage(rng, method, scipy_method):
    for _ in range(20):
        c = random_correlation(int(rng.integers(3, 15)), rng)
        _, filt = cluster(c, method)
        np.testing.assert_allclose(filt.values, scipy_filtered(c, scipy_method), atol=1e-12)


def test_tree_layout(sample10):
    tree, filt = alca(sample10)
    assert tree.n_leaves == 10 and len(tree.nodes) == 9
    assert tree.root == 18 and tree.is_binary()
    assert filt.source == "ALCA"
    # merge correlations never increase along the merge order for these inputs
    rhos = [nd.rho for nd in tree.nodes]
    assert rhos == sorted(rhos, reverse=True)
    np.testing.assert_array_equal(filtered_from_dendrogram(tree).values, filt.values)


def test_genealogy_uses_root_first_labels(sample10):
    tree, _ = alca(sample10)
    lab = root_first_labels(tree)
    labels = list(tree.labels)
    # figure leaf 3 is IBM, leaf 5 AIG, leaf 6 TXN
    assert [lab[a] for a in genealogy(tree, labels.index("IBM"))] == [6, 4, 3, 2, 1]
    assert [lab[a] for a in genealogy(tree, labels.index("AIG"))] == [3, 2, 1]
    assert [lab[a] for a in genealogy(tree, labels.index("TXN"))] == [7, 2, 1]
    alpha7 = next(k for k, v in lab.items() if v == 7)
    assert [lab[a] for a in genealogy(tree, alpha7)] == [7, 2, 1]
    with pytest.raises(IndexOutOfRange):
        genealogy(tree, 19)


def test_two_elements():
    tree, filt = slca(np.array([[1.0, -0.3], [-0.3, 1.0]]))
    assert tree.root == 2 and tree.node(2).children == (0, 1)
    assert filt.values[0, 1] == -0.3


def test_ties_break_on_smallest_indices():
    c = np.full((4, 4), 0.5)
    np.fill_diagonal(c, 1.0)
    tree, _ = alca(c)
    assert tree.node(4).children == (0, 1)
    assert tree.node(5).children == (4, 2)


def test_unknown_method(sample10):
    with pytest.raises(InputError):
        cluster(sample10, "complete")


def test_dendrogram_validation():
    with pytest.raises(InputError):
        Dendrogram(3, [Node((0, 1), 0.5)], ["a", "b", "c"], 3)  # leaf 2 unreachable
    d = Dendrogram(3, [Node((0, 1, 2), 0.5)], ["a", "b", "c"], 3)
    assert not d.is_binary() and d.leaves(3) == [0, 1, 2]
    with pytest.raises(IndexOutOfRange):
        d.node(0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 12), method=st.sampled_from(["alca", "slca"]))
def test_ultrametric_and_distinct_values(seed, n, method):
    c = random_correlation(n, np.random.default_rng(seed))
    _, f = cluster(c, method)
    v = f.values
    for i, j, k in itertools.permutations(range(n), 3):
        assert v[i, j] >= min(v[i, k], v[k, j]) - 1e-15
    assert len(np.unique(v[np.triu_indices(n, 1)])) <= n - 1


def test_newick_round_trip(sample10):
    tree, _ = alca(sample10)
    tree = tree.with_support({i: 0.25 * (i % 4) for i in tree.internal_ids()})
    text = to_newick(tree)
    back = from_newick(text)
    assert to_newick(back) == text
    np.testing.assert_allclose(
        filtered_from_dendrogram(back).values[np.ix_(*[np.argsort(back.labels)] * 2)],
        filtered_from_dendrogram(tree).values[np.ix_(*[np.argsort(tree.labels)] * 2)],
        atol=1e-11,
    )


def test_newick_quotes_awkward_labels():
    d = Dendrogram(3, [Node((0, 1), 0.7), Node((3, 2), -0.1, 0.9)], ["a b", "it's", "c:d"], 4)
    text = to_newick(d)
    assert text == "(('a b','it''s')0.7,'c:d')-0.1:0.9;"
    back = from_newick(text)
    assert back.labels == d.labels and back.node(4).bootstrap == 0.9


@pytest.mark.parametrize("text", ["(a,b)0.5", "(a,b)x;", "(a,(b,c)0.2;", "a;", "(a,)0.1;"])
def test_newick_errors(text):
    with pytest.raises(InputError):
        from_newick(text)
