"""The local rewiring Markov chain on spanning trees of K_n.

One rewire picks an edge ``e`` uniformly, forms the set ``S`` of nodes adjacent
to either endpoint (excluding the endpoints), picks the moved node ``M``
uniformly from ``S``, calls the endpoint adjacent to ``M`` the head ``H`` and
the other the tail ``T``, then replaces edge ``H-M`` by ``T-M``.  A sweep is
``n`` rewires.

In a tree the neighborhoods of ``H`` and ``T`` (minus each other) are
disjoint, so ``S`` never needs deduplication: ``|S| = deg(H) + deg(T) - 2``
and the k-th element is read straight off the two neighbor lists.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Callable

import numpy as np
from numba import njit

from .errors import ConfigError, StructureError, UnsupportedSizeError
from .observables import FAST_OBSERVABLES, measure_kernel
from .rng import Xoshiro256, bounded
from .stats import TimeSeries
from .tree import (SpanningTree, from_pruefer, link_half_edge, new_linear, pruefer_rank_kernel,
                   pruefer_unrank, tree_rank, unlink_half_edge)

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class RewireMove:
    """One applied transition: ``moved`` left ``head`` and joined ``tail``."""

    edge: tuple[int, int]
    head: int
    tail: int
    moved: int

    def mirror(self) -> "RewireMove":
        """The move that undoes this one."""
        return RewireMove(self.edge, self.tail, self.head, self.moved)


@dataclass
class ChainConfig:
    n: int
    seed: int = 0
    thermalization_sweeps: int = 0
    measurement_sweeps: int = 0

    def check(self) -> None:
        if self.n < 4:
            raise ConfigError(f"sampling runs need n >= 4 (n <= 3 has one class), got {self.n}")
        if self.thermalization_sweeps < 0 or self.measurement_sweeps < 0:
            raise ConfigError("sweep counts must be non-negative")


@njit(cache=True, nogil=True)
def rewire_kernel(owner, head, nxt, prv, deg, state, out):
    m = owner.shape[0] // 2
    i = bounded(state, m)
    u = owner[2 * i]
    v = owner[2 * i + 1]
    du = deg[u] - 1
    dv = deg[v] - 1
    k = bounded(state, du + dv)
    if k < du:
        hd = u
        tl = v
        skip = 2 * i
    else:
        hd = v
        tl = u
        skip = 2 * i + 1
        k -= du
    h = head[hd]
    while True:
        if h != skip:
            if k == 0:
                break
            k -= 1
        h = nxt[h]
    moved = owner[h ^ 1]
    # Half-edge h carried edge H-M; re-hang it on T so the same edge id now
    # stands for T-M. The twin stays with M and follows automatically.
    unlink_half_edge(h, hd, head, nxt, prv)
    link_half_edge(h, tl, head, nxt, prv)
    owner[h] = tl
    deg[hd] -= 1
    deg[tl] += 1
    out[0] = i
    out[1] = hd
    out[2] = tl
    out[3] = moved


@njit(cache=True, nogil=True)
def sweeps_kernel(owner, head, nxt, prv, deg, state, count):
    n = head.shape[0]
    out = np.empty(4, dtype=np.int64)
    for _ in range(count * n):
        rewire_kernel(owner, head, nxt, prv, deg, state, out)


@njit(cache=True, nogil=True)
def measured_sweeps_kernel(kind, owner, head, nxt, prv, deg, state, values, dist, queue):
    n = head.shape[0]
    out = np.empty(4, dtype=np.int64)
    for s in range(values.shape[0]):
        for _ in range(n):
            rewire_kernel(owner, head, nxt, prv, deg, state, out)
        values[s] = measure_kernel(kind, owner, head, nxt, deg, dist, queue)


def _require_rewirable(tree: SpanningTree) -> None:
    if tree.n < 3:
        raise UnsupportedSizeError(f"rewiring needs n >= 3, got n={tree.n}")


def rewire_step(tree: SpanningTree, rng: Xoshiro256) -> RewireMove:
    """Apply one random rewire in place and return it."""
    _require_rewirable(tree)
    out = np.empty(4, dtype=np.int64)
    rewire_kernel(tree.owner, tree.head, tree.nxt, tree.prv, tree.deg, rng.state, out)
    _, hd, tl, moved = (int(x) for x in out)
    return RewireMove((min(hd, tl), max(hd, tl)), hd, tl, moved)


def sweep(tree: SpanningTree, rng: Xoshiro256) -> list[RewireMove]:
    """``n`` rewires, returned in order."""
    _require_rewirable(tree)
    return [rewire_step(tree, rng) for _ in range(tree.n)]


def advance(tree: SpanningTree, rng: Xoshiro256, sweeps: int) -> None:
    """Run ``sweeps`` sweeps in place without recording moves.

    Consumes the random stream exactly as ``sweeps`` calls of :func:`sweep`.
    """
    _require_rewirable(tree)
    if sweeps > 0:
        sweeps_kernel(tree.owner, tree.head, tree.nxt, tree.prv, tree.deg, rng.state, sweeps)


def measure_sweeps(tree: SpanningTree, rng: Xoshiro256, sweeps: int,
                   observable: Callable[[SpanningTree], float]) -> np.ndarray:
    """Sweep ``sweeps`` times, recording ``observable`` after each sweep."""
    _require_rewirable(tree)
    values = np.empty(sweeps, dtype=np.float64)
    kind = FAST_OBSERVABLES.get(observable)
    if kind is not None:
        dist = np.empty(tree.n, dtype=np.int64)
        queue = np.empty(tree.n, dtype=np.int64)
        measured_sweeps_kernel(kind, tree.owner, tree.head, tree.nxt, tree.prv, tree.deg,
                               rng.state, values, dist, queue)
        return values
    for s in range(sweeps):
        sweeps_kernel(tree.owner, tree.head, tree.nxt, tree.prv, tree.deg, rng.state, 1)
        values[s] = observable(tree)
    return values


def apply_move(tree: SpanningTree, move: RewireMove) -> None:
    """Apply a specific move in place, checking its preconditions."""
    hd, tl, m = move.head, move.tail, move.moved
    if {hd, tl} != set(move.edge) or m in (hd, tl):
        raise StructureError(f"inconsistent move {move}")
    if tl not in tree.neighbors(hd):
        raise StructureError(f"{move.edge} is not an edge")
    h = tree.head[hd]
    while h >= 0 and tree.owner[h ^ 1] != m:
        h = tree.nxt[h]
    if h < 0:
        raise StructureError(f"moved node {m} is not adjacent to head {hd}")
    unlink_half_edge(h, hd, tree.head, tree.nxt, tree.prv)
    link_half_edge(h, tl, tree.head, tree.nxt, tree.prv)
    tree.owner[h] = tl
    tree.deg[hd] -= 1
    tree.deg[tl] += 1


def candidate_moves(tree: SpanningTree) -> list[tuple[RewireMove, Fraction]]:
    """Every move available from ``tree`` with its exact probability."""
    _require_rewirable(tree)
    p_edge = Fraction(1, tree.edge_count)
    moves = []
    for u, v in tree.edges():
        nu = [w for w in tree.neighbors(u) if w != v]
        nv = [w for w in tree.neighbors(v) if w != u]
        p = p_edge / (len(nu) + len(nv))
        moves += [(RewireMove((u, v), u, v, m), p) for m in nu]
        moves += [(RewireMove((u, v), v, u, m), p) for m in nv]
    return moves


# --- seeded chains -------------------------------------------------------

def tree_state(tree: SpanningTree) -> dict:
    """Exact internal state, including neighbor-list order (which the RNG draws depend on)."""
    return {"n": tree.n, "edges": [list(map(int, e)) for e in tree.edges()],
            "owner": tree.owner.tolist(), "head": tree.head.tolist(),
            "nxt": tree.nxt.tolist(), "prv": tree.prv.tolist()}


def tree_from_state(data: dict) -> SpanningTree:
    owner = np.array(data["owner"], dtype=np.int64)
    deg = np.bincount(owner, minlength=data["n"]).astype(np.int64)
    return SpanningTree(data["n"], owner, np.array(data["head"], dtype=np.int64),
                        np.array(data["nxt"], dtype=np.int64),
                        np.array(data["prv"], dtype=np.int64), deg)


@dataclass
class Checkpoint:
    config: ChainConfig
    observable: str
    sweeps_done: int
    rng_state: list[int]
    tree: SpanningTree
    values: list[float] = field(default_factory=list)

    def save(self, path: str | os.PathLike) -> None:
        data = {"version": CHECKPOINT_VERSION, "config": vars(self.config),
                "observable": self.observable, "sweeps_done": self.sweeps_done,
                "rng_state": [str(w) for w in self.rng_state],
                "tree": tree_state(self.tree), "values": self.values}
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fp:
            json.dump(data, fp)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Checkpoint":
        with open(path) as fp:
            data = json.load(fp)
        if data.get("version") != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {data.get('version')}")
        return cls(ChainConfig(**data["config"]), data["observable"], data["sweeps_done"],
                   [int(w) for w in data["rng_state"]], tree_from_state(data["tree"]),
                   data["values"])


def _observable_name(observable) -> str:
    return getattr(observable, "__name__", type(observable).__name__)


class MarkovChain:
    """A seeded chain: state tree, random stream and sweep counter.

    Starts from the linear tree unless ``initial`` is given.
    """

    def __init__(self, config: ChainConfig, initial: SpanningTree | None = None):
        config.check()
        self.config = config
        self.rng = Xoshiro256(config.seed)
        self.tree = new_linear(config.n) if initial is None else initial.copy()
        if self.tree.n != config.n:
            raise ConfigError(f"initial tree has n={self.tree.n}, config says n={config.n}")
        self.sweeps_done = 0

    def run(self, observable: Callable[[SpanningTree], float], *,
            checkpoint: str | os.PathLike | None = None, checkpoint_every: int = 0) -> TimeSeries:
        """Thermalize, then record ``observable`` once per measurement sweep.

        With ``checkpoint`` set, progress is written there every
        ``checkpoint_every`` sweeps and an existing checkpoint of the same run
        is resumed; the resumed series equals an uninterrupted one.
        """
        config = self.config
        name = _observable_name(observable)
        values: list[float] = []
        if checkpoint is not None and os.path.exists(checkpoint):
            ck = Checkpoint.load(checkpoint)
            if vars(ck.config) != vars(config) or ck.observable != name:
                raise ConfigError(f"checkpoint {checkpoint} belongs to a different run")
            self.rng.set_state(ck.rng_state)
            self.tree, values, self.sweeps_done = ck.tree, list(ck.values), ck.sweeps_done
        therm = config.thermalization_sweeps
        total = therm + config.measurement_sweeps
        saving = checkpoint is not None and checkpoint_every > 0
        step = checkpoint_every if saving else max(total, 1)
        while self.sweeps_done < total:
            done = self.sweeps_done
            stop = min(total, done + step)
            if done < therm:
                stop = min(stop, therm)
                advance(self.tree, self.rng, stop - done)
            else:
                values.extend(measure_sweeps(self.tree, self.rng, stop - done, observable).tolist())
            self.sweeps_done = stop
            if saving:
                Checkpoint(config, name, stop, self.rng.get_state(), self.tree, values).save(checkpoint)
        meta = {"n": config.n, "seed": config.seed, "observable": name,
                "sweeps_per_measurement": 1, "thermalization_sweeps": therm}
        return TimeSeries(np.asarray(values, dtype=np.float64), meta)


def run_chain(config: ChainConfig, observable: Callable[[SpanningTree], float], *,
              initial: SpanningTree | None = None, checkpoint: str | os.PathLike | None = None,
              checkpoint_every: int = 0) -> TimeSeries:
    """Seeded chain from the linear tree: thermalize, then record once per sweep.

    Identical config and seed give a bit-identical series.
    """
    chain = MarkovChain(config, initial)
    return chain.run(observable, checkpoint=checkpoint, checkpoint_every=checkpoint_every)


@njit(cache=True, nogil=True)
def class_histogram_kernel(owner, head, nxt, prv, deg, state, sweeps, table, counts):
    n = head.shape[0]
    out = np.empty(4, dtype=np.int64)
    work = np.empty(n, dtype=np.int64)
    removed = np.empty(n, dtype=np.bool_)
    for _s in range(sweeps):
        for _r in range(n):
            rewire_kernel(owner, head, nxt, prv, deg, state, out)
        counts[table[pruefer_rank_kernel(n, owner, head, nxt, deg, work, removed)]] += 1


def class_histogram(tree: SpanningTree, rng: Xoshiro256, sweeps: int,
                    table: np.ndarray, nclasses: int) -> np.ndarray:
    """Sweep ``sweeps`` times, counting the class after each sweep.

    ``table`` maps Pruefer rank to class index (see
    :func:`treewire.exact.class_index_table`), so this is limited to n <= 8.
    """
    _require_rewirable(tree)
    counts = np.zeros(nclasses, dtype=np.int64)
    class_histogram_kernel(tree.owner, tree.head, tree.nxt, tree.prv, tree.deg, rng.state,
                           sweeps, table, counts)
    return counts


# --- exact transition matrix ------------------------------------------

@dataclass
class TransitionMatrix:
    """Exact one-rewire transition probabilities between all labeled trees.

    States are indexed by Pruefer rank.  ``exact`` holds sparse rows of
    Fractions; ``probs`` is the dense float rendering.
    """

    n: int
    exact: list[dict[int, Fraction]]
    probs: np.ndarray

    @property
    def size(self) -> int:
        return len(self.exact)

    def state(self, index: int) -> SpanningTree:
        return from_pruefer(pruefer_unrank(index, self.n))


def build_transition_matrix(n: int) -> TransitionMatrix:
    if not 3 <= n <= 6:
        raise UnsupportedSizeError(f"transition matrix supported for 3 <= n <= 6, got {n}")
    size = n ** (n - 2)
    exact: list[dict[int, Fraction]] = []
    probs = np.zeros((size, size))
    for x in range(size):
        tree = from_pruefer(pruefer_unrank(x, n))
        row: dict[int, Fraction] = {}
        for move, p in candidate_moves(tree):
            y_tree = tree.copy()
            apply_move(y_tree, move)
            y = tree_rank(y_tree)
            row[y] = row.get(y, Fraction(0)) + p
        exact.append(row)
        for y, p in row.items():
            probs[x, y] = float(p)
    return TransitionMatrix(n, exact, probs)


def support_strongly_connected(tm: TransitionMatrix) -> tuple[bool, int | None]:
    """Strong connectivity of the support graph; witness is an unreachable state."""
    fwd = _reach(tm.exact, 0)
    if len(fwd) != tm.size:
        return False, min(set(range(tm.size)) - fwd)
    reverse: list[dict[int, Fraction]] = [{} for _ in range(tm.size)]
    for x, row in enumerate(tm.exact):
        for y in row:
            reverse[y][x] = row[y]
    back = _reach(reverse, 0)
    if len(back) != tm.size:
        return False, min(set(range(tm.size)) - back)
    return True, None


def _reach(rows, start) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in rows[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def support_period(tm: TransitionMatrix) -> int:
    """Period of the (strongly connected) support graph.

    gcd over all edges x->y of ``level(x) + 1 - level(y)`` with BFS levels
    from state 0; equals the gcd of all cycle lengths.
    """
    level = {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for y in tm.exact[x]:
                if y not in level:
                    level[y] = level[x] + 1
                    nxt.append(y)
        frontier = nxt
    g = 0
    for x, row in enumerate(tm.exact):
        for y in row:
            g = gcd(g, abs(level[x] + 1 - level[y]))
    return g


def asymmetric_entry(tm: TransitionMatrix) -> tuple[int, int] | None:
    """First (x, y) with p_xy != p_yx, or ``None`` if exactly symmetric."""
    for x, row in enumerate(tm.exact):
        for y, p in row.items():
            if tm.exact[y].get(x, Fraction(0)) != p:
                return x, y
    return None


def stationary_distribution(tm: TransitionMatrix) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 by least squares on the float matrix."""
    size = tm.size
    a = np.vstack([tm.probs.T - np.eye(size), np.ones((1, size))])
    b = np.zeros(size + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    return pi
