import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowlab.chain_recurrence import (
    build_chain_graph,
    chain_classes,
    chain_recurrent_set,
    graph_from_adjacency,
    is_internally_chain_transitive,
    nonwandering_nodes,
    transitive_closure,
)
from shadowlab.core_spaces import FiniteSystem
from shadowlab.errors import InvalidArgument, ResolutionError


@pytest.fixture(scope="module")
def three():
    fs = FiniteSystem.discrete(["a", "b", "c"], ["b", "a", "c"])
    return build_chain_graph(fs, 0.01, 0.1, nodes=fs.points)


def _oracle_classes(A):
    """Classes from the transitive closure: mutual reachability among recurrent nodes."""
    R = transitive_closure(A)
    rec = [i for i in range(len(A)) if R[i, i]]
    classes, seen = [], set()
    for i in rec:
        if i in seen:
            continue
        cls = tuple(j for j in rec if R[i, j] and R[j, i])
        seen.update(cls)
        classes.append(cls)
    return frozenset(rec), tuple(sorted(classes))


def test_three_point_graph(three):
    A = three.adjacency
    assert A.tolist() == [[False, True, False], [True, False, False], [False, False, True]]
    assert chain_recurrent_set(three) == {0, 1, 2}
    assert chain_classes(three).classes == ((0, 1), (2,))
    assert nonwandering_nodes(three) == {0, 1, 2}
    assert is_internally_chain_transitive(three, {0, 1})
    assert not is_internally_chain_transitive(three, {0, 2})
    assert not is_internally_chain_transitive(three, {0, 1, 2})
    with pytest.raises(InvalidArgument):
        is_internally_chain_transitive(three, set())
    assert "scale 0.1" in three.label()


def test_wandering_point():
    fs = FiniteSystem.discrete(["a", "b"], ["b", "b"])
    g = build_chain_graph(fs, 0.01, 0.1, nodes=fs.points)
    assert chain_recurrent_set(g) == {1}
    assert nonwandering_nodes(g) == {1}


def test_two_attracting_fixed_points():
    g = graph_from_adjacency([[1, 0, 0], [1, 0, 1], [0, 0, 1]])
    assert chain_classes(g).classes == ((0,), (2,))


def test_identity_grid_self_loops():
    fs = FiniteSystem([0, 1, 2, 3], [0, 1, 2, 3], [[abs(i - j) / 3 for j in range(4)] for i in range(4)])
    g = build_chain_graph(fs, 0.001, 0.01, nodes=fs.points)
    assert np.array_equal(g.adjacency, np.eye(4, dtype=bool))


def test_resolution_guard(tent):
    with pytest.raises(ResolutionError):
        build_chain_graph(tent, 0.1, 0.1)


def test_tent_grid_single_class(tent):
    g = build_chain_graph(tent, 2**-8, 2**-6)
    assert g.adjacency.any(axis=1).all()
    assert chain_recurrent_set(g) == set(range(g.size))
    assert len(chain_classes(g)) == 1


def test_golden_mean_single_class(golden):
    g = build_chain_graph(golden, 2**-6, 2**-4, nodes=golden.cylinder_sample(6))
    assert len(chain_classes(g)) == 1
    # irreducibility of the defining matrix, checked independently
    A = np.array(golden.A, dtype=int)
    assert (np.linalg.matrix_power(A + np.eye(2, dtype=int), 2) > 0).all()


def test_two_class_recurrent_set_not_transitive():
    g = graph_from_adjacency([[1, 0], [0, 1]])
    assert not is_internally_chain_transitive(g, chain_recurrent_set(g))


def test_exhaustive_small_graphs():
    for n in range(1, 4):
        for bits in itertools.product((0, 1), repeat=n * n):
            A = np.array(bits, dtype=bool).reshape(n, n)
            g = graph_from_adjacency(A)
            rec, classes = _oracle_classes(A)
            dec = chain_classes(g)
            assert dec.recurrent_nodes == rec and dec.classes == classes
            assert nonwandering_nodes(g) == rec


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.lists(st.booleans(), min_size=n * n, max_size=n * n)))
def test_scc_matches_closure(bits):
    n = int(len(bits) ** 0.5)
    A = np.array(bits, dtype=bool).reshape(n, n)
    g = graph_from_adjacency(A)
    dec = chain_classes(g)
    rec, classes = _oracle_classes(A)
    assert dec.recurrent_nodes == rec
    assert dec.classes == classes
    # partition, internal transitivity and one-step forward invariance
    assert set().union(*map(set, dec.classes)) == set(rec) if dec.classes else not rec
    for cls in dec.classes:
        assert is_internally_chain_transitive(g, cls)
        for u in cls:
            assert A[u, list(cls)].any()
    assert nonwandering_nodes(g) == rec


@settings(max_examples=30, deadline=None)
@given(st.floats(2**-6, 0.4))
def test_recurrent_set_monotone_in_eps(eps):
    from shadowlab.core_spaces import load_system

    t = load_system("builtin:tent")
    nodes = t.sample(2**-7)
    small = chain_recurrent_set(build_chain_graph(t, 2**-7, eps, nodes))
    big = chain_recurrent_set(build_chain_graph(t, 2**-7, eps * 1.5, nodes))
    assert small <= big
