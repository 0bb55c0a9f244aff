from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwb import graphs
from hwb.graphs import StableGraph


def _canon(gs):
    return {g.canonical().encode() for g in gs}


@pytest.mark.parametrize("tails, genus, count", [
    (3, 0, 1),
    (4, 0, 4),   # the point and three boundary divisors of the moduli of four points
    (5, 0, 26),  # 1 + 10 divisors + 15 codimension-two strata
    (1, 1, 2),
    (2, 1, 5),
])
def test_known_stratum_counts(tails, genus, count):
    assert len(graphs.enumerate_stable_graphs(5, genus, tails, labeled=True, genus=genus)) == count


@pytest.mark.parametrize("tails", [1, 2, 3, 4])
@pytest.mark.parametrize("labeled", [True, False])
def test_enumeration_matches_oracle(tails, labeled):
    mine = graphs.enumerate_stable_graphs(4, 1, tails, labeled)
    oracle = graphs.oracle_stable_graphs(4, 1, tails, labeled)
    assert len(mine) == len(oracle)
    assert _canon(mine) == _canon(oracle)
    assert len(_canon(mine)) == len(mine)


def test_enumerated_graphs_are_stable_and_connected():
    for g in graphs.enumerate_stable_graphs(5, 2, 2, labeled=False):
        assert g.is_stable() and g.is_connected()
        assert g.genus() <= 2


def test_no_graphs_without_tails_at_low_genus():
    assert graphs.enumerate_stable_graphs(3, 1, 0) == []
    assert len(graphs.enumerate_stable_graphs(3, 2, 0, genus=2)) > 0


@pytest.mark.parametrize("tails", [2, 3])
def test_automorphisms_match_brute_force(tails):
    for labeled in (True, False):
        for g in graphs.enumerate_stable_graphs(4, 2, tails, labeled):
            assert g.automorphisms() == graphs.brute_force_automorphisms(g), g.encode()


@pytest.mark.parametrize("k, aut", [(1, 2), (2, 4), (3, 6), (4, 8), (5, 10)])
def test_wheel_automorphisms(k, aut):
    w = graphs.wheel(k)
    assert w.genus() == 1 and w.is_stable()
    assert w.automorphisms() == aut == graphs.brute_force_automorphisms(w)


def test_encode_decode_round_trip():
    for labeled in (True, False):
        for g in graphs.enumerate_stable_graphs(4, 1, 3, labeled):
            assert StableGraph.decode(g.encode()) == g


@given(st.permutations(range(4)))
@settings(max_examples=30, deadline=None)
def test_canonical_form_is_relabeling_invariant(perm):
    g = StableGraph((0, 1, 0, 0), ((0, 1), (1, 2), (2, 3), (3, 3)), (0, 0, 2), True)
    h = g.relabel(perm)
    assert h.canonical() == g.canonical()
    assert graphs.isomorphic(g, h)
    assert h.automorphisms() == g.automorphisms()


def test_isomorphism_distinguishes_tail_placement():
    a = StableGraph((0, 0), ((0, 1),), (0, 0, 1), True)
    b = StableGraph((0, 0), ((0, 1),), (0, 1, 1), True)
    assert not graphs.isomorphic(a, b)


@pytest.mark.parametrize("V, G", [(0, 1), (graphs.MAX_VERTICES + 1, 1), (3, -1), (3, graphs.MAX_GENUS + 1)])
def test_bounds(V, G):
    with pytest.raises(graphs.GraphBoundsError):
        graphs.enumerate_stable_graphs(V, G, 2)
    with pytest.raises(graphs.GraphBoundsError):
        graphs.oracle_stable_graphs(V, G, 2)
