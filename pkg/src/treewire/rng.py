"""Seedable xoshiro256** generator usable from both Python and numba kernels.

The generator state is a ``uint64`` array of length 4 so jitted code can
advance it in place.  Seeds are expanded with splitmix64.  Independent
streams (replicas) are derived by XOR-ing the base seed with the splitmix64
hash of the stream key, so replica ``r`` of a run always sees the same
numbers regardless of how many other replicas exist or which worker runs it.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 output for input ``x`` (also used as a 64-bit hash)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_seed(seed: int, *keys: int) -> int:
    """Seed for the stream identified by ``keys`` under base ``seed``.

    A single key gives ``seed ^ splitmix64(r)``.  Several keys are chained
    through splitmix64 first, so ``(n, replica)`` and ``(replica, n)`` differ.
    """
    h = 0
    for k in keys:
        h = splitmix64(h ^ (k & _MASK64))
    return (seed & _MASK64) ^ h


def seed_state(seed: int) -> np.ndarray:
    """Expand a 64-bit seed into a xoshiro256 state with splitmix64."""
    state = np.empty(4, dtype=np.uint64)
    x = seed & _MASK64
    for i in range(4):
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        state[i] = z ^ (z >> 31)
    if not state.any():
        state[0] = 1
    return state


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, nogil=True)
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True, nogil=True)
def bounded(s, bound):
    """Uniform integer in ``[0, bound)`` by masked rejection (no modulo bias)."""
    if bound <= 1:
        return 0
    b = np.uint64(bound - 1)
    mask = b
    mask |= mask >> np.uint64(1)
    mask |= mask >> np.uint64(2)
    mask |= mask >> np.uint64(4)
    mask |= mask >> np.uint64(8)
    mask |= mask >> np.uint64(16)
    mask |= mask >> np.uint64(32)
    while True:
        x = next_u64(s) & mask
        if x <= b:
            return np.int64(x)


@njit(cache=True, nogil=True)
def uniform01(s):
    return np.float64(next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def _fill_bounded(s, bound, out):
    for i in range(out.shape[0]):
        out[i] = bounded(s, bound)


class Xoshiro256:
    """Python handle around a xoshiro256** state array.

    >>> a, b = Xoshiro256(7), Xoshiro256(7)
    >>> a.integers(10, size=5).tolist() == b.integers(10, size=5).tolist()
    True
    """

    def __init__(self, seed: int = 0):
        self.seed = seed & _MASK64
        self.state = seed_state(self.seed)

    @classmethod
    def for_stream(cls, seed: int, *keys: int) -> "Xoshiro256":
        return cls(stream_seed(seed, *keys))

    def next_u64(self) -> int:
        return int(next_u64(self.state))

    def integers(self, bound: int, size: int | None = None):
        """Uniform integer(s) in ``[0, bound)``."""
        if bound < 1:
            raise ValueError("bound must be positive")
        if size is None:
            return int(bounded(self.state, bound))
        out = np.empty(size, dtype=np.int64)
        _fill_bounded(self.state, bound, out)
        return out

    def random(self) -> float:
        return float(uniform01(self.state))

    def get_state(self) -> list[int]:
        return [int(x) for x in self.state]

    def set_state(self, words) -> None:
        words = [int(w) & _MASK64 for w in words]
        if len(words) != 4 or not any(words):
            raise ValueError("xoshiro256 state is four words, not all zero")
        self.state = np.array(words, dtype=np.uint64)


def as_rng(rng) -> Xoshiro256:
    """Accept a ``Xoshiro256`` or an integer seed."""
    if isinstance(rng, Xoshiro256):
        return rng
    if isinstance(rng, (int, np.integer)):
        return Xoshiro256(int(rng))
    raise TypeError(f"expected Xoshiro256 or int seed, got {type(rng).__name__}")
