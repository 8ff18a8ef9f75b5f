import io
import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_pruefer_decode, to_nx
from treewire import (InvalidLabelError, InvalidSizeError, SpanningTree, StructureError,
                      from_pruefer, new_linear, new_star, to_pruefer, validate)
from treewire.exact import class_names
from treewire.observables import class_code
from treewire.tree import (dump_edge_list, load_edge_list, pruefer_rank, pruefer_unrank,
                           tree_rank)


def pruefer_seqs(max_n=30):
    return st.integers(3, max_n).flatmap(
        lambda n: st.lists(st.integers(0, n - 1), min_size=n - 2, max_size=n - 2))


# --- constructors ---------------------------------------------------------

def test_linear_smallest():
    assert new_linear(2).edge_set() == {(0, 1)}


def test_linear_five():
    assert new_linear(5).edge_set() == {(0, 1), (1, 2), (2, 3), (3, 4)}


def test_linear_four_is_line_class():
    tree = new_linear(4)
    assert class_names(4)[class_code(tree)] == "Line"


def test_star_five_center_degree():
    assert new_star(5).degree(0) == 4


def test_star_two_equals_linear_two():
    assert new_star(2) == new_linear(2)


def test_star_seven_is_star_class():
    assert class_names(7)[class_code(new_star(7))] == "Star"


@pytest.mark.parametrize("make", [new_linear, new_star])
@pytest.mark.parametrize("n", [-3, 0, 1])
def test_constructors_reject_small_n(make, n):
    with pytest.raises(InvalidSizeError):
        make(n)


def test_constructors_valid_for_all_n_up_to_ten_thousand():
    for n in range(2, 10_001):
        assert validate(new_linear(n)) is None
        assert validate(new_star(n)) is None


# --- Pruefer codes --------------------------------------------------------

@pytest.mark.parametrize("n,c", [(3, 0), (5, 2), (9, 8)])
def test_constant_sequence_gives_star(n, c):
    tree = from_pruefer([c] * (n - 2))
    assert tree.edge_set() == {tuple(sorted((c, v))) for v in range(n) if v != c}


def test_n3_sequence_1_is_path():
    assert from_pruefer([1]).edge_set() == {(0, 1), (1, 2)}


def test_n4_all_sequences_line_and_star_counts():
    trees = [from_pruefer(s) for s in itertools.product(range(4), repeat=2)]
    assert len({t.edge_set() for t in trees}) == 16
    assert all(validate(t) is None for t in trees)
    names = class_names(4)
    counts = {}
    for t in trees:
        counts[names[class_code(t)]] = counts.get(names[class_code(t)], 0) + 1
    assert counts == {"Line": 12, "Star": 4}


def test_star_center_code():
    star = SpanningTree.from_edges(6, [(3, v) for v in range(6) if v != 3])
    assert to_pruefer(star) == [3, 3, 3, 3]


def test_path_code():
    assert to_pruefer(new_linear(4)) == [1, 2]


def test_roundtrip_all_n5():
    seqs = list(itertools.product(range(5), repeat=3))
    assert len(seqs) == 125
    for s in seqs:
        assert to_pruefer(from_pruefer(s)) == list(s)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8])
def test_decode_exhaustive_distinct_and_valid(n):
    seen = set()
    for s in itertools.product(range(n), repeat=n - 2):
        tree = from_pruefer(s, n)
        assert validate(tree) is None
        seen.add(tree.edge_set())
    assert len(seen) == n ** (n - 2)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_decode_matches_naive_oracle_and_roundtrips(n):
    for s in itertools.product(range(n), repeat=n - 2):
        tree = from_pruefer(s, n)
        assert tree.edge_set() == naive_pruefer_decode(s, n)
        assert to_pruefer(tree) == list(s)


@given(pruefer_seqs())
def test_decode_is_a_tree_per_networkx(seq):
    tree = from_pruefer(seq)
    assert nx.is_tree(to_nx(tree))
    assert to_pruefer(tree) == seq
    # Pruefer property: degree = occurrences + 1.
    for v in range(tree.n):
        assert tree.degree(v) == seq.count(v) + 1


def test_decode_errors():
    with pytest.raises(InvalidLabelError):
        from_pruefer([0, 5])
    with pytest.raises(InvalidLabelError):
        from_pruefer([-1])
    with pytest.raises(InvalidSizeError):
        from_pruefer([0, 0], n=7)


def test_to_pruefer_rejects_invalid_tree():
    broken = SpanningTree.from_edges(4, [(0, 1), (1, 2)], check=False)
    with pytest.raises(StructureError):
        to_pruefer(broken)


@given(pruefer_seqs(9))
def test_rank_unrank_and_kernel(seq):
    n = len(seq) + 2
    r = pruefer_rank(seq, n)
    assert 0 <= r < n ** (n - 2)
    assert pruefer_unrank(r, n) == seq
    assert tree_rank(from_pruefer(seq)) == r


def test_unrank_out_of_range():
    with pytest.raises(InvalidLabelError):
        pruefer_unrank(16, 4)


# --- validation -------------------------------------------------------------

def test_valid_linear_ten():
    assert validate(new_linear(10)) is None


def test_self_loop_reported():
    edges = new_linear(6).edges()
    edges[2] = (2, 2)
    report = validate(SpanningTree.from_edges(6, edges, check=False))
    assert report.kind == "self-loop"


def test_missing_edge_reports_disconnected():
    edges = new_linear(6).edges()[:-1]
    report = validate(SpanningTree.from_edges(6, edges, check=False))
    assert report.kind == "disconnected"


def test_duplicate_edge_and_cycle():
    dup = SpanningTree.from_edges(4, [(0, 1), (1, 0), (2, 3)], check=False)
    assert validate(dup).kind == "duplicate-edge"
    # Right edge count but a cycle plus an isolated node.
    cyc = SpanningTree.from_edges(4, [(0, 1), (1, 2), (2, 0)], check=False)
    assert validate(cyc).kind == "disconnected"
    extra = SpanningTree.from_edges(3, [(0, 1), (1, 2), (0, 2)], check=False)
    assert validate(extra).kind == "edge-count"


def test_corrupted_lists_reported_asymmetric():
    tree = new_linear(5)
    tree.deg[2] += 1
    assert validate(tree).kind == "asymmetric"
    tree = new_linear(5)
    tree.head[1] = 2  # node 1's list skips half-edge 1, so 0-1 is one-sided
    assert validate(tree).kind == "asymmetric"


def test_from_edges_checks_by_default():
    with pytest.raises(StructureError):
        SpanningTree.from_edges(4, [(0, 1), (1, 2)])
    with pytest.raises(InvalidLabelError):
        SpanningTree.from_edges(3, [(0, 1), (1, 7)])


# --- misc API ----------------------------------------------------------------

@given(pruefer_seqs(20), st.randoms(use_true_random=False))
def test_adjacency_symmetric_and_relabel(seq, rnd):
    tree = from_pruefer(seq)
    adj = tree.adjacency
    assert all(u in adj[v] for u in range(tree.n) for v in adj[u])
    perm = list(range(tree.n))
    rnd.shuffle(perm)
    moved = tree.relabel(perm)
    assert moved.edge_set() == {tuple(sorted((perm[u], perm[v]))) for u, v in tree.edges()}


def test_relabel_rejects_non_permutation():
    with pytest.raises(InvalidLabelError):
        new_linear(3).relabel([0, 0, 1])


def test_copy_is_independent():
    tree = new_linear(5)
    other = tree.copy()
    other.deg[0] = 99
    assert tree.deg[0] == 1
    assert tree == other  # equality compares edge sets only
    assert new_linear(5) == new_linear(5)
    assert new_linear(5) != new_star(5)


@given(pruefer_seqs(40))
@settings(max_examples=50)
def test_edge_list_roundtrip(seq):
    tree = from_pruefer(seq)
    buf = io.StringIO()
    dump_edge_list(tree, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == f"n {tree.n}"
    assert load_edge_list(io.StringIO(text)) == tree


def test_edge_list_errors():
    with pytest.raises(StructureError):
        load_edge_list(io.StringIO("0 1\n"))
    with pytest.raises(StructureError):
        load_edge_list(io.StringIO("n 3\n0 1 2\n"))
    with pytest.raises(StructureError):
        load_edge_list(io.StringIO("n 4\n0 1\n1 2\n"))


def test_arrays_are_int64():
    tree = new_linear(4)
    for arr in (tree.owner, tree.head, tree.nxt, tree.prv, tree.deg):
        assert arr.dtype == np.int64
