"""Exact small-n ensemble: enumeration, automorphism counts, class probabilities.

Every labeled tree is equally likely under the chain's stationary
distribution, so a class with automorphism group ``Aut`` has probability
``(n! / |Aut|) / n^(n-2)``.  :func:`exact_class_distribution` computes that
both by counting class codes over the full Pruefer enumeration and from the
automorphism count of one representative, and insists the two agree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Iterator

import numpy as np

from .errors import ConsistencyError, UnsupportedSizeError
from .observables import ClassCode, canonical_form
from .tree import SpanningTree, from_pruefer

MAX_ENUMERATION_N = 8

# Class names used in the published figures, keyed by n; edges are 0-based.
_NAMED_SHAPES: dict[int, list[tuple[str, list[tuple[int, int]]]]] = {
    3: [("Line", [(0, 1), (1, 2)])],
    4: [("Line", [(0, 1), (1, 2), (2, 3)]),
        ("Star", [(0, 1), (0, 2), (0, 3)])],
    5: [("Line", [(0, 1), (1, 2), (2, 3), (3, 4)]),
        ("Fork", [(0, 1), (1, 2), (2, 3), (2, 4)]),
        ("Star", [(0, 1), (0, 2), (0, 3), (0, 4)])],
    6: [("Line", [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]),
        ("Fork", [(0, 1), (1, 2), (2, 3), (3, 4), (3, 5)]),
        ("Trident", [(0, 1), (1, 2), (2, 3), (2, 4), (2, 5)]),
        ("Star", [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]),
        ("Butane", [(0, 2), (1, 2), (2, 3), (3, 4), (3, 5)]),
        ("Handle", [(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)])],
    7: [("Line", [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]),
        ("Fork", [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (4, 6)]),
        ("Trident", [(0, 1), (1, 2), (2, 3), (3, 4), (3, 5), (3, 6)]),
        ("Pitchfork", [(0, 1), (1, 2), (2, 3), (2, 4), (2, 5), (2, 6)]),
        ("Star", [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6)]),
        ("Handle", [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (3, 6)]),
        ("HandleFork", [(0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (3, 6)]),
        ("Pentane", [(0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (4, 6)]),
        ("TriFork", [(0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (3, 6)]),
        ("Tri", [(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]),
        ("Cross", [(0, 1), (1, 2), (2, 3), (3, 4), (2, 5), (2, 6)])],
}


def class_names(n: int) -> dict[ClassCode, str]:
    """Human names for the classes at small ``n`` (empty dict if none known)."""
    return {canonical_form(SpanningTree.from_edges(n, edges))[0]: name
            for name, edges in _NAMED_SHAPES.get(n, [])}


def _name_order(n: int) -> list[str]:
    return [name for name, _ in _NAMED_SHAPES.get(n, [])]


def _check_n(n: int, max_n: int) -> None:
    if not 3 <= n <= max_n:
        raise UnsupportedSizeError(f"exact enumeration supports 3 <= n <= {max_n}, got {n}")


def enumerate_labeled_trees(n: int, max_n: int = MAX_ENUMERATION_N) -> Iterator[SpanningTree]:
    """All ``n^(n-2)`` labeled trees, in Pruefer-rank order."""
    _check_n(n, max_n)
    for seq in itertools.product(range(n), repeat=n - 2):
        yield from_pruefer(seq, n)


def automorphism_count(tree: SpanningTree) -> int:
    """|Aut(tree)| from the center-rooted canonical form."""
    return canonical_form(tree)[1]


@dataclass(frozen=True)
class ClassRecord:
    code: ClassCode
    aut_size: int
    labellings: int
    probability: Fraction
    name: str | None = None

    @property
    def probability_float(self) -> float:
        return float(self.probability)

    def as_dict(self) -> dict:
        return {"class": self.name or self.code.code, "code": self.code.code,
                "aut": self.aut_size, "labellings": self.labellings,
                "pi": f"{self.probability.numerator}/{self.probability.denominator}",
                "pi_float": self.probability_float}


def _histogram(n: int, max_n: int):
    counts: dict[ClassCode, int] = {}
    reps: dict[ClassCode, SpanningTree] = {}
    for tree in enumerate_labeled_trees(n, max_n):
        code, _ = canonical_form(tree)
        if code not in counts:
            counts[code] = 0
            reps[code] = tree
        counts[code] += 1
    return counts, reps


def exact_class_distribution(n: int, max_n: int = MAX_ENUMERATION_N) -> list[ClassRecord]:
    """One record per isomorphism class, in figure order where names are known."""
    counts, reps = _histogram(n, max_n)
    total = n ** (n - 2)
    names = class_names(n)
    records = []
    for code, count in counts.items():
        aut = automorphism_count(reps[code])
        if count * aut != factorial(n):
            raise ConsistencyError(
                f"class {code}: counted {count} labellings but n!/|Aut| = {factorial(n)}/{aut}")
        records.append(ClassRecord(code, aut, count, Fraction(count, total), names.get(code)))
    if sum(r.labellings for r in records) != total:
        raise ConsistencyError("labelling counts do not add up to n^(n-2)")
    order = _name_order(n)
    records.sort(key=lambda r: (order.index(r.name) if r.name in order else len(order),
                                -r.labellings, r.code))
    return records


def class_index_table(n: int, max_n: int = MAX_ENUMERATION_N) -> tuple[np.ndarray, list[ClassRecord]]:
    """Map Pruefer rank -> index into ``exact_class_distribution(n)``.

    Lets the sampler histogram classes with a jitted rank computation instead
    of canonicalizing every sampled tree.
    """
    records = exact_class_distribution(n, max_n)
    index = {r.code: i for i, r in enumerate(records)}
    table = np.empty(n ** (n - 2), dtype=np.int64)
    for rank, tree in enumerate(enumerate_labeled_trees(n, max_n)):
        table[rank] = index[canonical_form(tree)[0]]
    return table, records


def exact_mean_observable(n: int, observable: Callable[[SpanningTree], float],
                          max_n: int = MAX_ENUMERATION_N) -> tuple[Fraction, float]:
    """Uniform average of ``observable`` over all labeled trees, exactly."""
    total = Fraction(0)
    for tree in enumerate_labeled_trees(n, max_n):
        total += Fraction(observable(tree))
    mean = total / n ** (n - 2)
    return mean, float(mean)
