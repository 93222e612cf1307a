import math
from fractions import Fraction
from itertools import product

import pytest

from src.antichain import (
    Antichain,
    AntichainClass,
    chain_decomposition,
    component_antichain_sums,
    enumerate_antichain,
    implicit_exponent,
    theorem_ratio_series,
)
from src.errors import CapacityError, NoRootError
from src.markov_model import eta_bounds, path_weight, successors
from src.spectral import analyze_system

S_CANTOR = math.log(2) / math.log(3)


def band(values):
    return max(values) / min(values)


def words_of_length(system, length):
    frontier = [(v,) for v in range(1, system.n_vertices + 1)]
    for _ in range(length - 1):
        frontier = [w + (j,) for w in frontier for j in successors(system, w[-1])]
    return frontier


def test_cantor_first_level(cantor, cantor_analysis):
    antichain = enumerate_antichain(cantor, 1, 1, cantor_analysis, materialize=True)
    assert antichain.phi == 8
    assert (antichain.depth_min, antichain.depth_max) == (3, 3)
    assert antichain.sum_energy == Fraction(2, 9)
    assert antichain.total_mass == 1
    assert sorted(antichain.words()) == sorted(product((1, 2), repeat=3))


@pytest.mark.parametrize("k", range(1, 9))
def test_cantor_general_level(cantor, cantor_analysis, k):
    antichain = enumerate_antichain(cantor, 1, k, cantor_analysis)
    assert antichain.phi == 2 ** (k + 2)
    assert antichain.depth_min == antichain.depth_max == k + 2
    assert antichain.sum_dim == pytest.approx(2.0, rel=1e-9)
    assert antichain.total_mass == 1


def test_ties_stay_for_the_next_antichain_without_exact_weights(cantor):
    # r = 1.5 has no exact weights; equal float weights are treated as ties
    antichain = enumerate_antichain(cantor, 1.5, 3)
    assert antichain.phi == 2 ** 5
    assert antichain.depth_min == antichain.depth_max == 5


def test_two_chain_membership(two_chain, two_chain_analysis):
    antichain = enumerate_antichain(two_chain, 1, 1, two_chain_analysis, materialize=True)
    threshold = Fraction(1, 18)
    words = antichain.words()
    assert len(words) == antichain.phi
    for word in words:
        weight = path_weight(two_chain, word)
        parent = path_weight(two_chain, word[:-1])
        assert weight.p_weight * weight.c_weight < threshold
        assert parent.p_weight * parent.c_weight >= threshold


def test_antichain_is_prefix_free_and_maximal(two_chain, two_chain_analysis):
    antichain = enumerate_antichain(two_chain, 1, 2, two_chain_analysis, materialize=True)
    members = set(antichain.words())
    for word in members:
        assert not any(word[:length] in members for length in range(1, len(word)))
    for word in words_of_length(two_chain, antichain.depth_max):
        prefixes = [word[:length] for length in range(1, len(word) + 1) if word[:length] in members]
        assert len(prefixes) == 1


def test_materialized_arrays_agree_with_aggregated_sums(two_chain, two_chain_analysis):
    antichain = enumerate_antichain(two_chain, 1, 5, two_chain_analysis, materialize=True)
    cylinders = antichain.cylinders
    assert len(cylinders) == antichain.phi
    assert cylinders.mass.sum() == pytest.approx(1.0, abs=1e-12)
    assert cylinders.weight.sum() == pytest.approx(float(antichain.sum_energy), rel=1e-12)
    assert cylinders.depth.min() == antichain.depth_min
    assert cylinders.depth.max() == antichain.depth_max


def test_weights_sit_in_one_step_band(two_chain, two_chain_analysis):
    for k in range(1, 10):
        antichain = enumerate_antichain(two_chain, 1, k, two_chain_analysis)
        for group in antichain.classes:
            assert antichain.threshold * Fraction(1, 18) <= group.weight < antichain.threshold


def test_depths_respect_one_step_bounds(two_chain, two_chain_analysis):
    lower, upper = eta_bounds(two_chain, 1)
    for k in range(1, 17):
        antichain = enumerate_antichain(two_chain, 1, k, two_chain_analysis)
        assert lower ** (antichain.depth_min - 1) <= lower ** k <= upper ** (antichain.depth_max - 2)


def test_capacity_guards(cantor, cantor_analysis):
    antichain = enumerate_antichain(cantor, 1, 10, cantor_analysis, materialize=True, materialize_cap=100)
    assert antichain.phi == 4096
    assert not antichain.materialized
    with pytest.raises(CapacityError):
        antichain.words()
    with pytest.raises(CapacityError):
        enumerate_antichain(cantor, 1, 3, cantor_analysis, capacity_cap=1)


def test_implicit_exponent_cantor_first_level(cantor, cantor_analysis):
    t = implicit_exponent(enumerate_antichain(cantor, 1, 1, cantor_analysis))
    assert t / (t + 1) == pytest.approx(math.log(8) / math.log(36), abs=1e-9)
    assert 8 * (1 / 36) ** (t / (t + 1)) == pytest.approx(1.0, abs=1e-9)


def test_implicit_exponent_converges_to_dimension(cantor, cantor_analysis):
    gaps = [abs(implicit_exponent(enumerate_antichain(cantor, 1, k, cantor_analysis)) - S_CANTOR)
            for k in range(2, 15)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.1


def test_implicit_exponent_two_chain_band(two_chain, two_chain_analysis):
    s = two_chain_analysis.s_r
    t = implicit_exponent(enumerate_antichain(two_chain, 1, 12, two_chain_analysis))
    assert s / 2 <= t <= 2 * s


def test_implicit_exponent_needs_two_words():
    single = AntichainClass(last_vertex=1, counts=(1,), chain=(), depth=2, count=1, mass=Fraction(1),
                            weight=Fraction(1, 6))
    antichain = Antichain(k=1, r=1.0, s_r=0.5, threshold=Fraction(1, 6), phi=1, depth_min=2, depth_max=2,
                          sum_energy=Fraction(1, 6), sum_dim=0.5, total_mass=Fraction(1), chain_sums={},
                          classes=(single,))
    with pytest.raises(NoRootError):
        implicit_exponent(antichain)


def test_chain_decomposition_two_chain(two_chain, two_chain_analysis):
    cs = two_chain_analysis.critical
    antichain = enumerate_antichain(two_chain, 1, 10, two_chain_analysis)
    decomposition = chain_decomposition(two_chain, 1, antichain, cs)
    assert {c.chain for c in decomposition.chains} == {(0,), (1,), (0, 1)}
    assert decomposition.residual > 0
    assert set(decomposition.by_length()) == {0, 1, 2}
    assert decomposition.total() == pytest.approx(antichain.sum_dim, rel=1e-12)


def test_chain_decomposition_incomparable(incomparable, incomparable_analysis):
    antichain = enumerate_antichain(incomparable, 1, 8, incomparable_analysis)
    decomposition = chain_decomposition(incomparable, 1, antichain, incomparable_analysis.critical)
    assert all(c.length == 1 for c in decomposition.chains)
    assert 2 not in decomposition.by_length()


def test_two_component_chain_sum_grows(two_chain, two_chain_analysis):
    cs = two_chain_analysis.critical
    ks = range(6, 17)
    values = []
    for k in ks:
        antichain = enumerate_antichain(two_chain, 1, k, two_chain_analysis)
        values.append(chain_decomposition(two_chain, 1, antichain, cs).value((0, 1)))
    assert all(b > a for a, b in zip(values, values[1:]))
    assert band([v / k for v, k in zip(values, ks)]) <= 3


def test_series_cantor(cantor, cantor_analysis):
    rows = theorem_ratio_series(cantor, 1, range(4, 13), cantor_analysis)
    for row in rows:
        assert row.ratio == row.uncorrected
        assert row.uncorrected == pytest.approx(6.0, rel=1e-9)
    assert band([row.uncorrected for row in rows]) <= 2


def test_series_incomparable(incomparable, incomparable_analysis):
    rows = theorem_ratio_series(incomparable, 1, range(8, 17), incomparable_analysis)
    assert band([row.uncorrected for row in rows]) <= 3


def test_series_two_chain_needs_log_correction(two_chain, two_chain_analysis):
    rows = theorem_ratio_series(two_chain, 1, range(8, 17), two_chain_analysis)
    uncorrected = [row.uncorrected for row in rows]
    assert all(b > a for a, b in zip(uncorrected, uncorrected[1:]))
    assert uncorrected[-1] / uncorrected[0] > 3
    assert band([row.ratio for row in rows]) <= 3
    assert band([row.sum_dim / row.k for row in rows]) <= 3
    assert "lambda_0-1" in rows[0].to_dict()


@pytest.mark.parametrize("name", ["cantor", "two_chain", "incomparable"])
def test_growth_and_depth_bands(name, request):
    system = request.getfixturevalue(name)
    analysis = analyze_system(system, 1)
    rows = theorem_ratio_series(system, 1, range(6, 17), analysis)
    assert band([math.log(row.phi) / row.k for row in rows]) <= 2
    assert all(row.l1 <= row.l2 and row.l2 / row.l1 <= 3 for row in rows)


def test_sum_dim_bands_without_correction(incomparable, incomparable_analysis):
    rows = theorem_ratio_series(incomparable, 1, range(8, 17), incomparable_analysis)
    assert band([row.sum_dim for row in rows]) <= 3


def test_component_sums_within_eigenvector_bounds(two_chain, two_chain_analysis):
    solution = two_chain_analysis.component_solutions[0]
    v = solution.right_eigenvector
    low, high = v.sum() / v.max(), v.sum() / v.min()
    sums = component_antichain_sums(two_chain, 1, {1, 2}, range(1, 13), two_chain_analysis)
    for value in sums.values():
        assert low * (1 - 1e-6) <= value <= high * (1 + 1e-6)
