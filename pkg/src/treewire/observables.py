"""Observables measured along the chain: diameter, height, max degree, class codes.

Diameter and height use jitted BFS over the half-edge lists of
:class:`~treewire.tree.SpanningTree`.  Class codes are AHU-style
parenthesis strings of the tree rooted at its center; for a bicentral tree
the lexicographically smaller of the two rooted codes is kept.  The same
traversal yields the automorphism-group size, see
:func:`treewire.exact.automorphism_count`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidLabelError
from .tree import SpanningTree

DIAMETER = 1
MAX_DEGREE = 2


@njit(cache=True, nogil=True)
def bfs_farthest(owner, head, nxt, root, dist, queue):
    """BFS from ``root``; returns (a farthest node, its distance)."""
    n = head.shape[0]
    for v in range(n):
        dist[v] = -1
    dist[root] = 0
    queue[0] = root
    qh = 0
    qt = 1
    far = root
    while qh < qt:
        v = queue[qh]
        qh += 1
        d = dist[v] + 1
        h = head[v]
        while h >= 0:
            w = owner[h ^ 1]
            if dist[w] < 0:
                dist[w] = d
                queue[qt] = w
                qt += 1
            h = nxt[h]
        far = v
    return far, dist[far]


@njit(cache=True, nogil=True)
def diameter_kernel(owner, head, nxt, dist, queue):
    # Root 0 rather than a random node: in a tree any root works.
    v1, _ = bfs_farthest(owner, head, nxt, 0, dist, queue)
    _, d = bfs_farthest(owner, head, nxt, v1, dist, queue)
    return d


@njit(cache=True, nogil=True)
def measure_kernel(kind, owner, head, nxt, deg, dist, queue):
    if kind == DIAMETER:
        return np.float64(diameter_kernel(owner, head, nxt, dist, queue))
    return np.float64(deg.max())


def diameter(tree: SpanningTree) -> int:
    """Edge length of the longest path, found by two BFS passes."""
    if tree.n == 1:
        return 0
    dist = np.empty(tree.n, dtype=np.int64)
    queue = np.empty(tree.n, dtype=np.int64)
    return int(diameter_kernel(tree.owner, tree.head, tree.nxt, dist, queue))


def height_from(tree: SpanningTree, root: int) -> int:
    """Largest BFS distance from ``root``."""
    if not 0 <= root < tree.n:
        raise InvalidLabelError(f"root {root} outside 0..{tree.n - 1}")
    dist = np.empty(tree.n, dtype=np.int64)
    queue = np.empty(tree.n, dtype=np.int64)
    _, h = bfs_farthest(tree.owner, tree.head, tree.nxt, root, dist, queue)
    return int(h)


def max_degree(tree: SpanningTree) -> int:
    return int(tree.deg.max()) if tree.n > 1 else 0


# Builtin observables that run_chain can evaluate inside the jitted loop.
FAST_OBSERVABLES = {diameter: DIAMETER, max_degree: MAX_DEGREE}
OBSERVABLES = {"diameter": diameter, "max_degree": max_degree}


@dataclass(frozen=True, order=True)
class ClassCode:
    """Canonical code of an unlabeled tree; equal codes iff isomorphic."""

    code: str

    def __str__(self):
        return self.code


def tree_centers(adj: list[list[int]]) -> list[int]:
    """Center (one node) or bicenter (two nodes) by repeated leaf stripping."""
    n = len(adj)
    if n <= 2:
        return list(range(n))
    deg = [len(a) for a in adj]
    layer = [v for v in range(n) if deg[v] <= 1]
    remaining = n
    while remaining > 2:
        remaining -= len(layer)
        nxt_layer = []
        for v in layer:
            for w in adj[v]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt_layer.append(w)
        layer = nxt_layer
    return sorted(layer)


def rooted_canonical(adj: list[list[int]], root: int, avoid: int = -1) -> tuple[str, int]:
    """AHU code and automorphism count of the subtree hanging from ``root``.

    ``avoid`` is a neighbor of ``root`` excluded from the subtree (used to
    split a tree at its central edge).  The automorphism count of a rooted
    tree is the product of the children's counts times ``m!`` for every
    group of ``m`` identical child subtrees.
    """
    parent = {root: avoid}
    order = [root]
    for v in order:
        for w in adj[v]:
            if w != parent[v]:
                parent[w] = v
                order.append(w)
    code: dict[int, str] = {}
    aut: dict[int, int] = {}
    children: dict[int, list[int]] = {v: [] for v in order}
    for v in order[1:]:
        children[parent[v]].append(v)
    for v in reversed(order):
        kids = sorted(children[v], key=code.__getitem__)
        count = 1
        run = 0
        for i, c in enumerate(kids):
            count *= aut[c]
            run = run + 1 if i and code[c] == code[kids[i - 1]] else 1
            count *= run  # accumulates run! across each group of equal codes
        code[v] = "(" + "".join(code[c] for c in kids) + ")"
        aut[v] = count
    return code[root], aut[root]


def canonical_form(tree: SpanningTree) -> tuple[ClassCode, int]:
    """Class code and automorphism-group size in one traversal."""
    adj = [tree.neighbors(v) for v in range(tree.n)]
    centers = tree_centers(adj)
    if len(centers) == 1:
        code, aut = rooted_canonical(adj, centers[0])
        return ClassCode(code), aut
    a, b = centers
    code_a, aut_a = rooted_canonical(adj, a, avoid=b)
    code_b, aut_b = rooted_canonical(adj, b, avoid=a)
    aut = aut_a * aut_b * (2 if code_a == code_b else 1)
    # Rooted code of the whole tree at each bicenter: own half plus the other
    # half as one more child. Keep the smaller.
    full_a = _attach(code_a, code_b)
    full_b = _attach(code_b, code_a)
    return ClassCode(min(full_a, full_b)), aut


def _attach(root_code: str, child_code: str) -> str:
    """Code of ``root_code``'s tree with one more child subtree inserted in order."""
    kids = _split_children(root_code)
    kids.append(child_code)
    kids.sort()
    return "(" + "".join(kids) + ")"


def _split_children(code: str) -> list[str]:
    kids = []
    depth = 0
    start = 1
    for i in range(1, len(code) - 1):
        depth += 1 if code[i] == "(" else -1
        if depth == 0:
            kids.append(code[start:i + 1])
            start = i + 1
    return kids


def class_code(tree: SpanningTree) -> ClassCode:
    return canonical_form(tree)[0]

