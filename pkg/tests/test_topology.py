"""Tree shapes: construction, bipartitions, enumeration, canonical forms."""

import numpy as np
import pytest

from ttnprep import ParameterError, TreeTopology
from ttnprep.topology import (canonical_leaf_tree, caterpillar_leaf_tree,
                              enumerate_leaf_trees, normalize_leaf_tree,
                              random_leaf_tree, tree_distances)


def _idlabels(num_leaves):
    return {i: i for i in range(num_leaves)}


def test_mps_topology_shape():
    topo = TreeTopology.mps([0, 1, 2, 3], 2)
    assert topo.labels() == [0, 1, 2, 3]
    assert len(topo.bonds) == 3
    assert all(d == 2 for d in topo.leaf_dims().values())


def test_bipartition_labels_complementary():
    topo = TreeTopology.mps([0, 1, 2], 2)
    for bond, left, right in topo.bipartitions():
        assert left | right == {0, 1, 2}
        assert not left & right
        assert topo.bipartition(bond) == (left, right)


def test_topology_rejects_cycles_and_forests():
    with pytest.raises(ParameterError):
        TreeTopology(bonds=((0, 1), (1, 2), (2, 0)), leaves=((0, 0, 2),))
    with pytest.raises(ParameterError):
        TreeTopology(bonds=(), leaves=((0, 0, 2), (1, 1, 2)))  # disconnected


def test_from_leaf_tree_star():
    # three leaves joined at one internal node
    edges = ((0, 3), (1, 3), (2, 3))
    topo = TreeTopology.from_leaf_tree(edges, 3, 2)
    assert topo.labels() == [0, 1, 2]
    degrees = {}
    for a, b in topo.bonds:
        degrees[a] = degrees.get(a, 0) + 1
        degrees[b] = degrees.get(b, 0) + 1
    assert max(degrees.values()) == 3


def test_from_leaf_tree_single_leaf():
    topo = TreeTopology.from_leaf_tree((), 1, 4)
    assert topo.labels() == [0]
    assert topo.bonds == ()


def test_enumeration_counts_match_double_factorial():
    # unrooted binary trees with L labeled leaves: (2L-5)!!
    for leaves, count in [(2, 1), (3, 1), (4, 3), (5, 15), (6, 105)]:
        trees = enumerate_leaf_trees(leaves)
        assert len(trees) == count
        forms = {canonical_leaf_tree(t, _idlabels(leaves)) for t in trees}
        assert len(forms) == count  # all distinct shapes


def test_random_leaf_tree_valid_and_seeded():
    edges = random_leaf_tree(6, np.random.default_rng(3))
    # 6 leaves + 4 internal nodes, 9 edges
    assert len(edges) == 9
    assert canonical_leaf_tree(edges, _idlabels(6)) in {
        canonical_leaf_tree(t, _idlabels(6)) for t in enumerate_leaf_trees(6)}
    again = random_leaf_tree(6, np.random.default_rng(3))
    assert canonical_leaf_tree(edges, _idlabels(6)) == \
        canonical_leaf_tree(again, _idlabels(6))


def test_random_leaf_tree_covers_all_shapes():
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(400):
        seen.add(canonical_leaf_tree(random_leaf_tree(4, rng), _idlabels(4)))
    assert len(seen) == 3


def test_caterpillar_shape():
    got = canonical_leaf_tree(caterpillar_leaf_tree(5), _idlabels(5))
    # hand-built caterpillar: leaves hang off a spine in label order
    spine = [(0, 5), (1, 5), (5, 6), (2, 6), (6, 7), (3, 7), (4, 7)]
    assert got == canonical_leaf_tree(spine, _idlabels(5))
    # permuting the middle leaves gives a different labeled shape
    swapped = [(0, 5), (2, 5), (5, 6), (1, 6), (6, 7), (3, 7), (4, 7)]
    assert got != canonical_leaf_tree(swapped, _idlabels(5))


def test_canonical_form_invariant_under_relabeling_internals():
    edges = ((0, 4), (1, 4), (2, 5), (3, 5), (4, 5))
    shuffled = ((0, 9), (1, 9), (2, 7), (3, 7), (9, 7))
    assert canonical_leaf_tree(edges, _idlabels(4)) == \
        canonical_leaf_tree(shuffled, _idlabels(4))


def test_canonical_form_distinguishes_leaf_pairings():
    a = ((0, 4), (1, 4), (2, 5), (3, 5), (4, 5))  # (01)(23)
    b = ((0, 4), (2, 4), (1, 5), (3, 5), (4, 5))  # (02)(13)
    assert canonical_leaf_tree(a, _idlabels(4)) != \
        canonical_leaf_tree(b, _idlabels(4))


def test_canonical_form_suppresses_degree_two_internals():
    # a redundant pass-through node changes nothing
    plain = ((0, 3), (1, 3), (2, 3))
    padded = ((0, 3), (1, 3), (2, 9), (9, 3))
    assert canonical_leaf_tree(plain, _idlabels(3)) == \
        canonical_leaf_tree(padded, _idlabels(3))


def test_normalize_preserves_canonical_form():
    rng = np.random.default_rng(12)
    for _ in range(20):
        edges = random_leaf_tree(5, rng)
        norm = normalize_leaf_tree(edges, _idlabels(5))
        assert canonical_leaf_tree(norm, _idlabels(5)) == \
            canonical_leaf_tree(edges, _idlabels(5))
        # normalized ids: leaves 0..4 first, internals 5..7
        nodes = {u for e in norm for u in e}
        assert nodes == set(range(8))


def test_tree_distances_path():
    d = tree_distances(((0, 1), (1, 2), (2, 3)))
    assert d[0, 3] == 3
    assert d[1, 2] == 1
    assert d[0, 0] == 0
    assert d[3, 0] == 3


def test_mps_topology_bipartitions_are_contiguous():
    topo = TreeTopology.mps([0, 1, 2, 3, 4], 2)
    for bond, left, right in topo.bipartitions():
        side = sorted(left if 0 in left else right)
        assert side == list(range(len(side)))
