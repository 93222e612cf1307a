import math

import pytest

from src.errors import ChainLengthError, InvalidWordError
from src.graph_analysis import (
    coefficient_regime,
    critical_components_visited,
    critical_structure,
    enumerate_chains,
    scc_condensation,
    t_r_of_path,
    transient_sum,
)
from src.markov_model import successors

S_CANTOR = math.log(2) / math.log(3)
S_H1 = 0.367184
S_K = 0.315465


def all_words(system, max_length):
    frontier = [(v,) for v in range(1, system.n_vertices + 1)]
    while frontier:
        yield from frontier
        frontier = [w + (j,) for w in frontier if len(w) < max_length for j in successors(system, w[-1])]


def test_cantor_condensation(cantor):
    condensation = scc_condensation(cantor)
    assert condensation.components == (frozenset({1, 2}),)
    assert condensation.dag_edges == ()
    assert condensation.acyclic == (False,)


def test_two_chain_condensation(two_chain):
    condensation = scc_condensation(two_chain)
    assert condensation.components == (frozenset({1, 2}), frozenset({3, 4}), frozenset({5}), frozenset({6, 7}))
    assert condensation.acyclic == (False, False, True, False)
    assert condensation.dag_edges == ((0, 2), (1, 3), (2, 1))
    assert condensation.topo_order == (0, 2, 1, 3)
    assert condensation.reaches(0, 3)
    assert not condensation.reaches(3, 0)


def test_incomparable_condensation(incomparable):
    condensation = scc_condensation(incomparable)
    assert condensation.components == (frozenset({1, 2}), frozenset({3, 4}), frozenset({5}))
    assert not condensation.reaches(0, 1)
    assert not condensation.reaches(1, 0)
    assert condensation.reaches(2, 0) and condensation.reaches(2, 1)


def test_every_edge_is_internal_or_a_dag_edge(two_chain):
    condensation = scc_condensation(two_chain)
    for i, j in two_chain.edges:
        a, b = condensation.component_of(i), condensation.component_of(j)
        assert a == b or (a, b) in condensation.dag_edges


def test_critical_structure_fixture_values(cantor, two_chain, incomparable):
    cs = critical_structure(cantor, 1, {0: S_CANTOR})
    assert (cs.m_r, cs.t_r, cs.transient_set) == (1, 1, frozenset())

    cs = critical_structure(two_chain, 1, {0: S_H1, 1: S_H1, 3: S_K})
    assert cs.critical_set == (0, 1)
    assert (cs.m_r, cs.t_r) == (2, 2)
    assert cs.transient_set == frozenset({5, 6, 7})

    cs = critical_structure(incomparable, 1, {0: S_CANTOR, 1: S_CANTOR})
    assert (cs.m_r, cs.t_r) == (2, 1)


def test_trivial_components_are_never_critical(two_chain):
    cs = critical_structure(two_chain, 1, [S_H1, S_H1, 5.0, S_K])
    assert cs.per_component[2] == 0.0
    assert not cs.is_critical(2)
    assert cs.s_r_global == S_H1


def test_enumerate_chains(two_chain, incomparable):
    cs = critical_structure(two_chain, 1, {0: S_H1, 1: S_H1, 3: S_K})
    assert enumerate_chains(cs, 2) == ((0, 1),)
    assert enumerate_chains(cs, 1) == ((0,), (1,))
    with pytest.raises(ChainLengthError):
        enumerate_chains(cs, 3)
    with pytest.raises(ChainLengthError):
        enumerate_chains(cs, 0)

    cs = critical_structure(incomparable, 1, {0: S_CANTOR, 1: S_CANTOR})
    assert enumerate_chains(cs, 2) == ()


def test_chain_counts_bounded(two_chain, incomparable):
    for system, values in ((two_chain, {0: S_H1, 1: S_H1, 3: S_K}),
                           (incomparable, {0: S_CANTOR, 1: S_CANTOR})):
        cs = critical_structure(system, 1, values)
        assert set(enumerate_chains(cs, 1)) == {(c,) for c in cs.critical_set}
        for l in range(1, cs.m_r + 1):
            chains = enumerate_chains(cs, l)
            assert len(chains) <= math.comb(cs.m_r, l)
            if l > cs.t_r:
                assert chains == ()


def test_t_r_of_path(two_chain):
    cs = critical_structure(two_chain, 1, {0: S_H1, 1: S_H1, 3: S_K})
    assert t_r_of_path(cs, (1, 2, 5, 3)) == 2
    assert t_r_of_path(cs, (6, 7, 6)) == 0
    assert t_r_of_path(cs, (3, 4, 3)) == 1
    assert critical_components_visited(cs, (1, 2, 5, 3, 4, 6)) == [0, 1]
    with pytest.raises(InvalidWordError):
        t_r_of_path(cs, (1, 3))


@pytest.mark.parametrize("name, values", [
    ("cantor", {0: S_CANTOR}),
    ("two_chain", {0: S_H1, 1: S_H1, 3: S_K}),
    ("incomparable", {0: S_CANTOR, 1: S_CANTOR}),
])
def test_t_r_matches_brute_force(name, values, request):
    system = request.getfixturevalue(name)
    cs = critical_structure(system, 1, values)
    assert max(t_r_of_path(cs, w) for w in all_words(system, 9)) == cs.t_r


def test_transient_sum_empty_set(cantor, cantor_analysis):
    assert transient_sum(cantor, cantor_analysis.critical, 5) == 0.0


def test_transient_sum_values(two_chain, two_chain_analysis):
    cs = two_chain_analysis.critical
    x = cs.s_r_global / (cs.s_r_global + 1)
    assert transient_sum(two_chain, cs, 1) == pytest.approx(3.0)
    # only words inside F = {5, 6, 7}: 66, 67, 76, 77
    assert transient_sum(two_chain, cs, 2) == pytest.approx(4 * (1 / 18) ** x, rel=1e-12)
    assert transient_sum(two_chain, cs, 2) == pytest.approx(1.84049, abs=1e-4)


def test_transient_sum_decays_geometrically(two_chain, two_chain_analysis):
    cs = two_chain_analysis.critical
    sums = [transient_sum(two_chain, cs, n) for n in range(10, 62)]
    ratios = [b / a for a, b in zip(sums, sums[1:])]
    assert 0.90 <= ratios[-1] <= 0.94
    assert ratios[-1] == pytest.approx(0.92024, abs=1e-4)


def test_coefficient_regime(cantor_analysis, two_chain_analysis, incomparable_analysis):
    assert coefficient_regime(cantor_analysis.critical) == "finite"
    assert coefficient_regime(two_chain_analysis.critical) == "infinite"
    assert coefficient_regime(incomparable_analysis.critical) == "finite"
