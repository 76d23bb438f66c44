"""Tree topologies: the connectivity skeleton of a tree tensor network,
plus utilities for labeled trees (random generation, enumeration,
distances, canonical forms).

Node ids are small ints. Physical legs carry hashable labels; the label
set doubles as the variable index set of the distribution being encoded.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .errors import ParameterError

Label = Hashable


@dataclass(frozen=True)
class TreeTopology:
    """Connectivity of a tree tensor network.

    bonds  : tuple of (node, node) pairs, the internal edges
    leaves : tuple of (node, label, dim) triples, the physical legs

    The node set is inferred. The bond graph must be a tree (connected,
    acyclic) over the nodes, and labels must be unique.
    """

    bonds: tuple[tuple[int, int], ...]
    leaves: tuple[tuple[int, Label, int], ...]

    def __post_init__(self):
        nodes = self.nodes()
        if not nodes:
            raise ParameterError("topology has no nodes")
        labels = [lab for _, lab, _ in self.leaves]
        if len(set(labels)) != len(labels):
            raise ParameterError("duplicate physical labels")
        for _, _, d in self.leaves:
            if d < 1:
                raise ParameterError("physical dimension must be >= 1")
        if len(self.bonds) != len(nodes) - 1:
            raise ParameterError("bond count != node count - 1: not a tree")
        # connectivity
        adj = self.adjacency()
        seen = {next(iter(nodes))}
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        if seen != nodes:
            raise ParameterError("bond graph is not connected")

    def nodes(self) -> set[int]:
        ns = set()
        for u, v in self.bonds:
            ns.add(u)
            ns.add(v)
        for u, _, _ in self.leaves:
            ns.add(u)
        return ns

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {u: [] for u in self.nodes()}
        for u, v in self.bonds:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def labels(self) -> list[Label]:
        # labels are homogeneous (all ints, or all (dim, bit) tuples)
        return sorted(lab for _, lab, _ in self.leaves)

    def leaf_dims(self) -> dict[Label, int]:
        return {lab: d for _, lab, d in self.leaves}

    def bipartition(self, bond: tuple[int, int]) -> tuple[frozenset, frozenset]:
        """Labels on each side of an internal bond, (u-side, v-side)."""
        u, v = bond
        adj = self.adjacency()
        side = set()
        queue = deque([u])
        seen = {u, v}
        while queue:
            w = queue.popleft()
            side.add(w)
            for x in adj[w]:
                if x not in seen:
                    seen.add(x)
                    queue.append(x)
        left = frozenset(lab for nd, lab, _ in self.leaves if nd in side)
        right = frozenset(lab for nd, lab, _ in self.leaves if nd not in side)
        return left, right

    def bipartitions(self) -> list[tuple[tuple[int, int], frozenset, frozenset]]:
        return [(b, *self.bipartition(b)) for b in self.bonds]

    @classmethod
    def mps(cls, labels: Sequence[Label], dims: Sequence[int] | int) -> "TreeTopology":
        """Path topology: node i carries physical label labels[i]."""
        D = len(labels)
        if isinstance(dims, int):
            dims = [dims] * D
        bonds = tuple((i, i + 1) for i in range(D - 1))
        leaves = tuple((i, labels[i], dims[i]) for i in range(D))
        return cls(bonds, leaves)

    @classmethod
    def from_leaf_tree(cls, edges: Sequence[tuple[int, int]], num_leaves: int,
                       dim: int) -> "TreeTopology":
        """Tensor topology realizing an unrooted leaf-labeled tree one to
        one: every vertex becomes a tensor node, each labeled leaf
        0..num_leaves-1 carries its own physical leg, and internal
        vertices hold bonds only.

        Keeping the realization uniform lets structure policies that
        enumerate trees and policies that walk between them price every
        candidate identically.
        """
        if num_leaves < 1:
            raise ParameterError("need at least one leaf")
        if num_leaves == 1:
            if edges:
                raise ParameterError("a single leaf admits no edges")
            return cls((), ((0, 0, dim),))
        leaves = tuple((i, i, dim) for i in range(num_leaves))
        return cls(tuple(tuple(e) for e in edges), leaves)


def random_leaf_tree(num_leaves: int, rng: np.random.Generator,
                     ) -> list[tuple[int, int]]:
    """Uniform random unrooted binary tree with labeled leaves 0..num_leaves-1
    and unlabeled internal nodes num_leaves.., internal degree 3.

    Grown by inserting each new leaf into a uniformly chosen existing edge;
    at step k there are 2k-3 edges, so all (2n-5)!! topologies are equally
    likely.
    """
    if num_leaves < 2:
        raise ParameterError("need at least 2 leaves")
    edges = [(0, 1)]
    next_internal = num_leaves
    for k in range(2, num_leaves):
        i = int(rng.integers(len(edges)))
        u, v = edges.pop(i)
        w = next_internal
        next_internal += 1
        edges.extend([(u, w), (v, w), (k, w)])
    return edges


def enumerate_leaf_trees(num_leaves: int) -> list[list[tuple[int, int]]]:
    """All unrooted binary trees with labeled leaves 0..num_leaves-1.

    Leaf insertion into every edge of every smaller tree; each topology is
    produced exactly once, (2n-5)!! in total.
    """
    if num_leaves < 2:
        raise ParameterError("need at least 2 leaves")
    trees = [[(0, 1)]]
    next_internal = num_leaves
    for k in range(2, num_leaves):
        grown = []
        for tree in trees:
            for i in range(len(tree)):
                u, v = tree[i]
                w = next_internal
                rest = tree[:i] + tree[i + 1:]
                grown.append(rest + [(u, w), (v, w), (k, w)])
        trees = grown
        next_internal += 1
    return trees


def tree_distances(edges: Sequence[tuple[int, int]]) -> np.ndarray:
    """All-pairs path lengths of a tree given as an edge list over 0..V-1."""
    nodes = set()
    for u, v in edges:
        nodes.update((u, v))
    V = max(nodes) + 1
    adj = {n: [] for n in range(V)}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    dist = np.full((V, V), -1, dtype=int)
    for s in range(V):
        dist[s, s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[s, v] < 0:
                    dist[s, v] = dist[s, u] + 1
                    queue.append(v)
    if (dist < 0).any():
        raise ParameterError("edge list is not a connected tree")
    return dist


def _suppressed_adjacency(edges: Sequence[tuple[int, int]],
                          labels: dict[int, Label]) -> dict[int, set]:
    # prune unlabeled degree-1 vertices, contract through unlabeled
    # degree-2 vertices; tensor-network artifacts (pendant tensors,
    # pass-through tensors) then cannot affect tree comparisons
    adj: dict[int, set[int]] = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    for n in labels:
        adj.setdefault(n, set())
    changed = True
    while changed:
        changed = False
        for n in list(adj):
            if n in labels:
                continue
            deg = len(adj[n])
            if deg == 1:
                (nb,) = adj[n]
                adj[nb].discard(n)
                del adj[n]
                changed = True
            elif deg == 2:
                a, b = adj[n]
                adj[a].discard(n)
                adj[b].discard(n)
                adj[a].add(b)
                adj[b].add(a)
                del adj[n]
                changed = True
    return adj


def canonical_leaf_tree(edges: Sequence[tuple[int, int]],
                        labels: dict[int, Label]) -> tuple:
    """Canonical form of a leaf-labeled tree, invariant under node
    renaming and under pendant or pass-through tensor artifacts.  The
    form is the minimum over all rootings of a recursive
    (label, sorted children) encoding.
    """
    adj = _suppressed_adjacency(edges, labels)

    def encode(node: int, parent: int | None) -> tuple:
        lab = repr(labels[node]) if node in labels else ""
        kids = sorted(encode(c, node) for c in adj[node] if c != parent)
        return (lab, tuple(kids))

    return min(encode(r, None) for r in adj)


def normalize_leaf_tree(edges: Sequence[tuple[int, int]],
                        labels: dict[int, Label]) -> list[tuple[int, int]]:
    """Suppressed copy of a leaf-labeled tree on standard vertex ids:
    the vertex labeled i becomes vertex i, unlabeled vertices follow as
    len(labels).. in old-id order.  Labels must be exactly 0..L-1.
    """
    L = len(labels)
    if sorted(labels.values()) != list(range(L)):
        raise ParameterError("labels must be exactly 0..L-1")
    adj = _suppressed_adjacency(edges, labels)
    remap = dict(labels)
    nxt = L
    for old in sorted(adj):
        if old not in remap:
            remap[old] = nxt
            nxt += 1
    out = {tuple(sorted((remap[u], remap[v])))
           for u in adj for v in adj[u]}
    return sorted(out)


def caterpillar_leaf_tree(num_leaves: int) -> list[tuple[int, int]]:
    """Caterpillar tree with leaves in label order: the default structure
    before any optimization, matching a chain of variables."""
    if num_leaves < 1:
        raise ParameterError("need at least one leaf")
    L = num_leaves
    if L == 1:
        return []
    if L == 2:
        return [(0, 1)]
    edges = [(0, L), (1, L)]
    for i in range(1, L - 2):
        edges.append((L + i - 1, L + i))
        edges.append((i + 1, L + i))
    edges.append((L - 1, 2 * L - 3))
    return edges
