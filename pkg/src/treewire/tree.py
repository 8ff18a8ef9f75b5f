"""Labeled spanning trees of K_n, validity checks and the Pruefer bijection.

A tree is stored as ``n - 1`` edges split into half-edges.  Half-edge ``2*i``
and ``2*i + 1`` are the two ends of edge ``i``; ``owner[h]`` is the node the
half-edge hangs from, and the node at the other end is ``owner[h ^ 1]``.
Each node keeps its half-edges in a doubly linked list (``head``, ``nxt``,
``prv``), which gives O(deg) neighbor walks and O(1) edge moves with O(n)
memory regardless of degree.  All arrays are plain ``int64`` numpy arrays so
the numba kernels in :mod:`treewire.rewire` and :mod:`treewire.observables`
can operate on them directly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np
from numba import njit

from .errors import InvalidLabelError, InvalidSizeError, StructureError


@njit(cache=True, nogil=True, inline="always")
def unlink_half_edge(h, v, head, nxt, prv):
    p = prv[h]
    q = nxt[h]
    if p >= 0:
        nxt[p] = q
    else:
        head[v] = q
    if q >= 0:
        prv[q] = p


@njit(cache=True, nogil=True, inline="always")
def link_half_edge(h, v, head, nxt, prv):
    q = head[v]
    nxt[h] = q
    prv[h] = -1
    if q >= 0:
        prv[q] = h
    head[v] = h


class SpanningTree:
    """Labeled tree on nodes ``0..n-1``; the Markov-chain state.

    Instances can hold arbitrary edge lists (including invalid ones) so that
    :func:`validate` has something to report on; the constructors that take
    user input check by default.
    """

    __slots__ = ("n", "owner", "head", "nxt", "prv", "deg")

    def __init__(self, n, owner, head, nxt, prv, deg):
        self.n = n
        self.owner = owner
        self.head = head
        self.nxt = nxt
        self.prv = prv
        self.deg = deg

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], check: bool = True) -> "SpanningTree":
        if n < 1:
            raise InvalidSizeError(f"tree needs at least one node, got n={n}")
        if isinstance(edges, np.ndarray):
            owner = edges.astype(np.int64).reshape(-1)
        else:
            owner = np.array([(int(u), int(v)) for u, v in edges], dtype=np.int64).reshape(-1)
        if owner.size and (owner.min() < 0 or owner.max() >= n):
            h = int(np.flatnonzero((owner < 0) | (owner >= n))[0])
            u, v = owner[h & ~1], owner[h | 1]
            raise InvalidLabelError(f"edge ({u}, {v}) has a label outside 0..{n - 1}")
        # Each node's list holds its half-edges in insertion order.
        order = np.argsort(owner, kind="stable")
        same = owner[order[1:]] == owner[order[:-1]]
        nxt = np.full(owner.size, -1, dtype=np.int64)
        prv = np.full(owner.size, -1, dtype=np.int64)
        nxt[order[:-1][same]] = order[1:][same]
        prv[order[1:][same]] = order[:-1][same]
        head = np.full(n, -1, dtype=np.int64)
        first = np.ones(owner.size, dtype=bool)
        first[1:] = ~same
        head[owner[order[first]]] = order[first]
        deg = np.bincount(owner, minlength=n).astype(np.int64)
        tree = cls(n, owner, head, nxt, prv, deg)
        if check:
            report = validate(tree)
            if report is not None:
                raise StructureError(str(report))
        return tree

    @property
    def edge_count(self) -> int:
        return self.owner.shape[0] // 2

    def edges(self) -> list[tuple[int, int]]:
        """Edges as sorted pairs, in edge-id order."""
        pairs = self.owner.reshape(-1, 2)
        return [(min(u, v), max(u, v)) for u, v in pairs.tolist()]

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((int(u), int(v)) for u, v in self.edges())

    def neighbors(self, v: int) -> list[int]:
        """Neighbors of ``v`` in the node's internal list order."""
        out = []
        h = self.head[v]
        while h >= 0:
            out.append(int(self.owner[h ^ 1]))
            h = self.nxt[h]
        return out

    @property
    def adjacency(self) -> list[set[int]]:
        return [set(self.neighbors(v)) for v in range(self.n)]

    def degree(self, v: int) -> int:
        return int(self.deg[v])

    def copy(self) -> "SpanningTree":
        return SpanningTree(self.n, self.owner.copy(), self.head.copy(), self.nxt.copy(),
                            self.prv.copy(), self.deg.copy())

    def relabel(self, perm: Sequence[int]) -> "SpanningTree":
        """Tree with node ``v`` renamed to ``perm[v]``."""
        if sorted(perm) != list(range(self.n)):
            raise InvalidLabelError("relabeling must be a permutation of 0..n-1")
        return SpanningTree.from_edges(self.n, [(perm[u], perm[v]) for u, v in self.edges()],
                                       check=False)

    def __eq__(self, other):
        if not isinstance(other, SpanningTree):
            return NotImplemented
        return self.n == other.n and self.edge_set() == other.edge_set()

    __hash__ = None

    def __repr__(self):
        return f"SpanningTree(n={self.n}, edges={sorted(self.edges())})"


def new_linear(n: int) -> SpanningTree:
    """Path ``0-1-...-(n-1)``: the chain's starting configuration."""
    if n < 2:
        raise InvalidSizeError(f"a tree with an edge needs n >= 2, got {n}")
    i = np.arange(n - 1)
    return SpanningTree.from_edges(n, np.column_stack([i, i + 1]), check=False)


def new_star(n: int) -> SpanningTree:
    """Star centered on node 0."""
    if n < 2:
        raise InvalidSizeError(f"a tree with an edge needs n >= 2, got {n}")
    i = np.arange(1, n)
    return SpanningTree.from_edges(n, np.column_stack([np.zeros_like(i), i]), check=False)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


_VIOLATIONS = {
    1: ("label", "edge {a} has an endpoint outside 0..n-1"),
    2: ("self-loop", "edge {a} joins node {b} to itself"),
    3: ("duplicate-edge", "edge key {a} appears twice"),
    4: ("disconnected", "{a} edges cannot connect {b} nodes"),
    5: ("edge-count", "found {a} edges, expected {b}"),
    6: ("asymmetric", "half-edge {a} misfiled in the list of node {b}"),
    7: ("asymmetric", "node {a} has degree counter {b} that disagrees with its list"),
    8: ("disconnected", "BFS from node 0 reaches {a} of {b} nodes"),
}


@njit(cache=True, nogil=True)
def _validate_kernel(n, owner, head, nxt, deg):
    m = owner.shape[0] // 2
    for h in range(2 * m):
        if owner[h] < 0 or owner[h] >= n:
            return 1, h // 2, 0
    keys = np.empty(m, dtype=np.int64)
    for i in range(m):
        u = owner[2 * i]
        v = owner[2 * i + 1]
        if u == v:
            return 2, i, u
        if u > v:
            u, v = v, u
        keys[i] = u * n + v
    keys.sort()
    for i in range(1, m):
        if keys[i] == keys[i - 1]:
            return 3, keys[i], 0
    if m < n - 1:
        return 4, m, n
    if m > n - 1:
        return 5, m, n - 1
    listed = np.zeros(2 * m, dtype=np.bool_)
    for v in range(n):
        count = 0
        h = head[v]
        while h >= 0:
            if owner[h] != v or listed[h]:
                return 6, h, v
            listed[h] = True
            count += 1
            h = nxt[h]
        if count != deg[v]:
            return 7, v, deg[v]
    for h in range(2 * m):
        if not listed[h]:
            return 6, h, owner[h]
    seen = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    seen[0] = True
    queue[0] = 0
    qh = 0
    qt = 1
    while qh < qt:
        v = queue[qh]
        qh += 1
        h = head[v]
        while h >= 0:
            w = owner[h ^ 1]
            if not seen[w]:
                seen[w] = True
                queue[qt] = w
                qt += 1
            h = nxt[h]
    if qt != n:
        return 8, qt, n
    return 0, 0, 0


def validate(tree: SpanningTree) -> Violation | None:
    """Check every spanning-tree invariant; ``None`` if all hold.

    Checks run in order labels, self-loops, duplicate edges, edge count,
    adjacency symmetry, connectivity; the first failure is returned.
    Adjacency symmetry here means every half-edge sits in its owner's list
    exactly once and degree counters match the lists.
    """
    code, a, b = _validate_kernel(tree.n, tree.owner, tree.head, tree.nxt, tree.deg)
    if code == 0:
        return None
    kind, template = _VIOLATIONS[code]
    return Violation(kind, template.format(a=int(a), b=int(b)))


# --- Pruefer sequences -------------------------------------------------------

def from_pruefer(seq: Sequence[int], n: int | None = None) -> SpanningTree:
    """Unique labeled tree on ``len(seq) + 2`` nodes with Pruefer code ``seq``."""
    seq = [int(x) for x in seq]
    if n is None:
        n = len(seq) + 2
    elif n != len(seq) + 2:
        raise InvalidSizeError(f"Pruefer code for n={n} has length {n - 2}, got {len(seq)}")
    for x in seq:
        if not 0 <= x < n:
            raise InvalidLabelError(f"Pruefer entry {x} outside 0..{n - 1}")
    remaining = [1] * n
    for x in seq:
        remaining[x] += 1
    leaves = [v for v in range(n) if remaining[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        remaining[x] -= 1
        if remaining[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return SpanningTree.from_edges(n, edges, check=False)


def to_pruefer(tree: SpanningTree) -> list[int]:
    """Pruefer code: repeatedly strip the smallest leaf, record its neighbor."""
    report = validate(tree)
    if report is not None:
        raise StructureError(f"not a spanning tree ({report})")
    n = tree.n
    if n < 2:
        raise InvalidSizeError("Pruefer codes need n >= 2")
    adj = tree.adjacency
    deg = [len(a) for a in adj]
    leaves = [v for v in range(n) if deg[v] == 1]
    heapq.heapify(leaves)
    seq = []
    for _ in range(n - 2):
        leaf = heapq.heappop(leaves)
        (parent,) = adj[leaf]
        seq.append(parent)
        adj[parent].discard(leaf)
        deg[parent] -= 1
        if deg[parent] == 1:
            heapq.heappush(leaves, parent)
    return seq


def pruefer_rank(seq: Sequence[int], n: int) -> int:
    """Position of ``seq`` in lexicographic order of all length n-2 codes."""
    r = 0
    for x in seq:
        r = r * n + int(x)
    return r


def pruefer_unrank(rank: int, n: int) -> list[int]:
    seq = [0] * (n - 2)
    for i in range(n - 3, -1, -1):
        rank, seq[i] = divmod(rank, n)
    if rank:
        raise InvalidLabelError("rank exceeds n^(n-2) - 1")
    return seq


@njit(cache=True, nogil=True)
def pruefer_rank_kernel(n, owner, head, nxt, deg, work_deg, removed):
    """Pruefer rank of the tree stored in the arrays; O(n^2), meant for n <= 8."""
    for v in range(n):
        work_deg[v] = deg[v]
        removed[v] = False
    rank = 0
    for _ in range(n - 2):
        leaf = 0
        while removed[leaf] or work_deg[leaf] != 1:
            leaf += 1
        h = head[leaf]
        parent = -1
        while h >= 0:
            w = owner[h ^ 1]
            if not removed[w]:
                parent = w
                break
            h = nxt[h]
        rank = rank * n + parent
        removed[leaf] = True
        work_deg[parent] -= 1
    return rank


def tree_rank(tree: SpanningTree) -> int:
    """Pruefer rank computed by the jitted kernel (trees with n <= 8)."""
    work = np.empty(tree.n, dtype=np.int64)
    removed = np.empty(tree.n, dtype=np.bool_)
    return int(pruefer_rank_kernel(tree.n, tree.owner, tree.head, tree.nxt, tree.deg, work, removed))


# --- edge-list text format ------------------------------------------------

def dump_edge_list(tree: SpanningTree, fp: IO[str]) -> None:
    """Write ``n <count>`` followed by one ``u v`` line per edge."""
    fp.write(f"n {tree.n}\n")
    for u, v in tree.edges():
        fp.write(f"{u} {v}\n")


def load_edge_list(fp: IO[str]) -> SpanningTree:
    lines = [ln.strip() for ln in fp if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].startswith("n "):
        raise StructureError("edge list must start with a 'n <count>' header")
    n = int(lines[0].split()[1])
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise StructureError(f"bad edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return SpanningTree.from_edges(n, edges)
