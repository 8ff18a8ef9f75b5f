"""Independent reference implementations used only by the tests.

Nothing here imports treewire internals beyond SpanningTree construction,
so a bug in the package cannot silently agree with itself.
"""

from __future__ import annotations

import itertools
from collections import deque
from functools import lru_cache
from math import factorial

import networkx as nx
import numpy as np

from treewire import SpanningTree

MASK = (1 << 64) - 1


def to_nx(tree: SpanningTree) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(tree.n))
    g.add_edges_from(tree.edges())
    return g


def all_pairs_diameter(edges, n: int) -> int:
    """Max over all start nodes of BFS eccentricity."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    best = 0
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        q = deque([s])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    q.append(y)
        best = max(best, max(dist))
    return best


def naive_pruefer_decode(seq, n):
    """Textbook O(n^2) decoder: repeatedly join the smallest leaf to the next entry."""
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(v for v in range(n) if degree[v] == 1)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [w for w in range(n) if degree[w] == 1]
    edges.append((u, v))
    return frozenset(edges)


def all_pruefer_trees(n):
    """Every labeled tree on n nodes as a frozenset of sorted edges."""
    return [naive_pruefer_decode(seq, n) for seq in itertools.product(range(n), repeat=n - 2)]


@lru_cache(maxsize=None)
def permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def adjacency_matrix(edges, n):
    a = np.zeros((n, n), dtype=bool)
    for u, v in edges:
        a[u, v] = a[v, u] = True
    return a


def brute_automorphisms(edges, n: int) -> int:
    """Count permutations p with {p(u), p(v)} an edge for every edge {u, v}."""
    if n == 1:
        return 1
    perms = permutations(n)
    a = adjacency_matrix(edges, n)
    ok = np.ones(perms.shape[0], dtype=bool)
    for u, v in edges:
        ok &= a[perms[:, u], perms[:, v]]
    return int(ok.sum())


def brute_isomorphic(edges_a, edges_b, n: int) -> bool:
    perms = permutations(n)
    b = adjacency_matrix(edges_b, n)
    ok = np.ones(perms.shape[0], dtype=bool)
    for u, v in edges_a:
        ok &= b[perms[:, u], perms[:, v]]
    return bool(ok.any())


def brute_transition_rows(tree_edges, n):
    """One-rewire successor distribution from plain edge sets, as {frozenset: prob}."""
    from fractions import Fraction
    edges = sorted(tree_edges)
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    out = {}
    for u, v in edges:
        s = (adj[u] | adj[v]) - {u, v}
        for m in s:
            hd = u if m in adj[u] else v
            tl = v if hd == u else u
            new = set(tree_edges)
            new.discard((min(hd, m), max(hd, m)))
            new.add((min(tl, m), max(tl, m)))
            key = frozenset(new)
            out[key] = out.get(key, Fraction(0)) + Fraction(1, len(edges) * len(s))
    return out


def ar1_series(phi: float, size: int, seed: int) -> np.ndarray:
    """x_t = phi x_{t-1} + e_t, started from the stationary law."""
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(size)
    x = np.empty(size)
    x[0] = e[0] / np.sqrt(1 - phi * phi)
    for t in range(1, size):
        x[t] = phi * x[t - 1] + e[t]
    return x


def ar1_tau(phi: float) -> float:
    return 0.5 * (1 + phi) / (1 - phi)


def splitmix64_ref(state: int):
    """Reference splitmix64 stream generator (Vigna's C code transcribed)."""
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def xoshiro_ref(s):
    """Reference xoshiro256** in pure Python integers."""
    s = list(s)

    def rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & MASK

    while True:
        result = (rotl((s[1] * 5) & MASK, 7) * 9) & MASK
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        yield result


def labelling_count(aut: int, n: int) -> int:
    return factorial(n) // aut
