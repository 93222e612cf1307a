import logging
import math
from fractions import Fraction

import numpy as np
import pytest

from src.antichain import enumerate_antichain
from src.errors import CapacityError, InfeasibleLayoutError, InvalidWordError, UnsupportedOrderError
from src.geometry_quantize import (
    Codebook,
    _assign,
    _cell_center,
    antichain_codebook,
    antichain_upper_bound,
    build_discretization,
    cylinder_arrays,
    cylinder_interval,
    dimension_estimates,
    error_curve,
    feasible_depth,
    fit_slope,
    integrate_error,
    lloyd_refine,
    monte_carlo_error,
    optimal_two_point,
    realize,
)
from src.markov_model import MarkovSystem, successors

S_CANTOR = math.log(2) / math.log(3)


@pytest.fixture(scope="module")
def cantor_layout(cantor):
    return realize(cantor)


def test_cantor_layout(cantor_layout):
    assert cantor_layout.child_layout(1) == [(1, Fraction(0), Fraction(1, 3)), (2, Fraction(2, 3), Fraction(1))]
    assert cantor_layout.gaps == (Fraction(1, 3), Fraction(1, 3))
    assert cantor_layout.sep_t == pytest.approx(1.0)
    assert cantor_layout.root_intervals == [(0.0, 1.0), (2.0, 3.0)]


def test_two_chain_layout(two_chain):
    layout = realize(two_chain)
    assert layout.child_layout(6) == [(6, Fraction(0), Fraction(1, 9)), (7, Fraction(8, 9), Fraction(1))]
    assert layout.child_layout(2) == [(1, Fraction(0), Fraction(1, 3)), (5, Fraction(2, 3), Fraction(1))]
    assert layout.row_separation[5] == pytest.approx(7.0)
    assert layout.sep_t == pytest.approx(1.0)


def test_infeasible_layout():
    wide = MarkovSystem.from_matrices([["1/2", "1/2"], ["1/2", "1/2"]],
                                      [["1/2", "1/2"], ["1/3", "1/3"]], ["1/2", "1/2"])
    with pytest.raises(InfeasibleLayoutError):
        realize(wide)


def test_cylinder_interval(cantor_layout):
    assert cylinder_interval(cantor_layout, (2,)) == (Fraction(2), Fraction(1))
    assert cylinder_interval(cantor_layout, (1, 2, 1)) == (Fraction(2, 3), Fraction(1, 9))
    assert cylinder_interval(cantor_layout, (2, 2, 2)) == (Fraction(26, 9), Fraction(1, 9))
    with pytest.raises(InvalidWordError):
        cylinder_interval(cantor_layout, (1, 3))
    with pytest.raises(ValueError):
        cylinder_interval(cantor_layout, ())


@pytest.mark.parametrize("name", ["cantor", "two_chain", "incomparable"])
def test_children_are_disjoint_and_nested(name, request):
    system = request.getfixturevalue(name)
    layout = realize(system)
    frontier = [(v,) for v in range(1, system.n_vertices + 1)]
    for _ in range(4):
        following = []
        for word in frontier:
            left, length = cylinder_interval(layout, word)
            children = []
            for j in successors(system, word[-1]):
                child = word + (j,)
                child_left, child_length = cylinder_interval(layout, child)
                assert child_length == length * system.c[word[-1] - 1][j - 1]
                assert left <= child_left and child_left + child_length <= left + length
                children.append((child_left, child_length))
                following.append(child)
            children.sort()
            for (a, la), (b, _) in zip(children, children[1:]):
                assert a + la < b
        frontier = following


def test_cylinder_arrays_match_exact_intervals(two_chain, two_chain_analysis):
    layout = realize(two_chain)
    antichain = enumerate_antichain(two_chain, 1, 2, two_chain_analysis, materialize=True)
    left, length = cylinder_arrays(layout, antichain)
    for word, a, c in zip(antichain.words(), left, length):
        exact_left, exact_length = cylinder_interval(layout, word)
        assert a == pytest.approx(float(exact_left), abs=1e-12)
        assert c == pytest.approx(float(exact_length), rel=1e-12)


def test_cylinder_arrays_need_materialized_words(cantor, cantor_layout, cantor_analysis):
    antichain = enumerate_antichain(cantor, 1, 2, cantor_analysis)
    with pytest.raises(CapacityError):
        cylinder_arrays(cantor_layout, antichain)


def test_codebook_is_sorted_and_unique():
    codebook = Codebook([1.0, 0.0, 1.0])
    assert codebook.points.tolist() == [0.0, 1.0]
    assert codebook.size == 2
    with pytest.raises(ValueError):
        Codebook([])


def test_midpoint_codebook_upper_bound(cantor, cantor_layout):
    for r, expected in ((1, 1 / 18), (2, 1 / 324)):
        antichain = enumerate_antichain(cantor, r, 1, materialize=True)
        assert antichain_upper_bound(antichain) == pytest.approx(expected, abs=1e-12)
        codebook = antichain_codebook(cantor_layout, antichain)
        assert codebook.size == 8
        estimate = integrate_error(cantor_layout, cantor, codebook, r, 7)
        assert estimate.lower <= estimate.discrete <= estimate.upper
        assert estimate.upper <= expected + 1e-12


def test_bracket_narrows_with_integration_depth(cantor, cantor_layout, cantor_analysis):
    antichain = enumerate_antichain(cantor, 1, 1, cantor_analysis, materialize=True)
    codebook = antichain_codebook(cantor_layout, antichain)
    widths = [integrate_error(cantor_layout, cantor, codebook, 1, depth, cantor_analysis).width
              for depth in range(2, 10)]
    assert all(b <= a + 1e-12 for a, b in zip(widths, widths[1:]))
    assert widths[-1] < widths[0] / 100


def test_single_point_bracket_contains_exact_error(cantor, cantor_layout, cantor_analysis):
    estimate = integrate_error(cantor_layout, cantor, Codebook([0.5]), 1, 8, cantor_analysis)
    assert estimate.lower <= 7 / 6 <= estimate.upper
    assert estimate.width < 1e-2


def test_monte_carlo_matches_exact_error(cantor, cantor_layout):
    mean, stderr = monte_carlo_error(cantor_layout, cantor, Codebook([0.5]), 1, samples=20000, seed=7)
    assert abs(mean - 7 / 6) <= 5 * stderr
    again = monte_carlo_error(cantor_layout, cantor, Codebook([0.5]), 1, samples=20000, seed=7)
    assert again == (mean, stderr)


def test_assignment_ties_go_to_lower_index():
    cells = _assign(np.array([0.0, 1.0, 3.0]), np.array([0.25, 0.5, 2.0, 2.5]))
    assert cells.tolist() == [0, 0, 1, 2]


def test_cell_centers():
    midpoints = np.array([0.0, 1.0, 2.0, 10.0])
    masses = np.array([1.0, 1.0, 1.0, 1.0])
    assert _cell_center(midpoints, masses, 2.0) == pytest.approx(3.25)
    assert _cell_center(midpoints, masses, 1.0) == 1.0
    symmetric = np.array([0.0, 1.0, 2.0])
    assert _cell_center(symmetric, np.ones(3), 1.5) == pytest.approx(1.0, abs=1e-6)


def test_lloyd_reaches_template_means(cantor, cantor_layout, cantor_analysis):
    result = lloyd_refine(cantor_layout, cantor, Codebook([0.2, 0.9]), 2, 10, analysis=cantor_analysis)
    assert result.codebook.points == pytest.approx([0.5, 2.5], abs=1e-9)
    assert result.iterations >= 1
    assert result.final.discrete == pytest.approx(1 / 8, abs=1e-3)
    uppers = [estimate.upper for estimate in result.trace]
    assert all(b <= a for a, b in zip(uppers, uppers[1:]))


def test_lloyd_matches_brute_force_two_point(cantor, cantor_layout):
    discretization = build_discretization(cantor_layout, cantor, 2, 10)
    codebook, optimal = optimal_two_point(cantor_layout, cantor, 10, 2, discretization=discretization)
    result = lloyd_refine(cantor_layout, cantor, Codebook([0.2, 0.9]), 2, 10, discretization=discretization)
    assert codebook.points == pytest.approx([0.5, 2.5], abs=1e-9)
    assert abs(result.final.discrete - optimal.discrete) <= 1e-9


def test_lloyd_never_raises_the_bound(two_chain, two_chain_analysis):
    layout = realize(two_chain)
    antichain = enumerate_antichain(two_chain, 1, 3, two_chain_analysis, materialize=True)
    result = lloyd_refine(layout, two_chain, antichain_codebook(layout, antichain), 1, 7,
                          analysis=two_chain_analysis)
    uppers = [estimate.upper for estimate in result.trace]
    assert all(b <= a for a, b in zip(uppers, uppers[1:]))
    assert result.codebook.size == antichain_codebook(layout, antichain).size


def test_lloyd_rejects_small_orders(cantor, cantor_layout):
    with pytest.raises(UnsupportedOrderError):
        lloyd_refine(cantor_layout, cantor, Codebook([0.5]), 0.5, 4)


def test_feasible_depth_respects_the_cap(cantor, cantor_analysis):
    assert feasible_depth(cantor, 1, 3, 6, cantor_analysis, materialize_cap=100) == 4
    assert feasible_depth(cantor, 1, 3, 2, cantor_analysis) == 5


@pytest.mark.parametrize("r", [1, 2])
def test_error_curve_slope(cantor, r):
    rows = error_curve(cantor, r, range(4, 10), depth_offset=4)
    for row in rows:
        assert row.lower <= row.discrete <= row.upper
        assert row.n == 2 ** (row.k + 2)
        assert row.integration_depth == row.k + 4
    assert all(b.upper <= a.upper for a, b in zip(rows, rows[1:]))
    slope = fit_slope([row.n for row in rows], [row.upper for row in rows])
    expected = -r / S_CANTOR
    assert abs(slope - expected) <= 0.1 * abs(expected)


def test_error_curve_with_refinement(cantor):
    plain = error_curve(cantor, 2, range(2, 5), depth_offset=4)
    refined = error_curve(cantor, 2, range(2, 5), refine=True, depth_offset=4)
    for a, b in zip(plain, refined):
        assert b.upper <= a.upper + 1e-15
        assert b.n == a.n


def test_refinement_below_order_one_is_skipped(cantor, caplog):
    with caplog.at_level(logging.WARNING, logger="Quantizer"):
        rows = error_curve(cantor, 0.5, range(2, 4), refine=True, depth_offset=2)
    assert "Lloyd refinement needs r >= 1" in caplog.text
    assert all(row.iterations == 0 for row in rows)
    assert all(b.upper <= a.upper for a, b in zip(rows, rows[1:]))


def test_dimension_estimates(cantor):
    rows = error_curve(cantor, 1, range(5, 8), depth_offset=4)
    estimates = dimension_estimates(rows, 1, S_CANTOR)
    assert [e.k for e in estimates] == [5, 6, 7]
    for e in estimates:
        assert e.lower_dimension is None or e.lower_dimension <= e.upper_dimension
        assert abs(e.upper_dimension - S_CANTOR) < 0.1
        assert e.coefficient > 0
