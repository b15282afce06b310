from fractions import Fraction
from math import comb

import numpy as np
import pytest

from milnorcells.arrangement import Arrangement
from milnorcells.poly import MultiPoly, build_critical_system, critical_system, expand_product
from milnorcells.solver import (
    AT_INFINITY,
    FAILED,
    FINITE,
    TrackerOptions,
    bezout_number,
    classify,
    format_trace,
    newton_refine,
    solve,
)
from oracles import example_closed_form, match_sets, plane_critical_points, qt_solution_norm

EXAMPLE_ROWS = [[1, 0, 0], [1, -1, 0], [1, 1, -1]]


def system(rows):
    return critical_system(Arrangement.from_rows(rows))


def expanded_system(rows):
    """Same system without its factored form."""
    return build_critical_system(expand_product(Arrangement.from_rows(rows).forms))


def qt_rows(t):
    return [[1, 0, 0], [1, 1, 0], [1, -1, Fraction(t)]]


def assert_conserved(ss):
    assert ss.n_finite + ss.n_diverged + ss.n_failed == ss.bezout
    assert sum(ss.cluster_sizes) == ss.n_finite
    assert len(ss.paths) == ss.bezout


def test_bezout_number():
    assert bezout_number(system(EXAMPLE_ROWS)) == 12
    assert bezout_number(system([[1, 0], [0, 1], [1, 1], [1, 2]])) == 4 * 3


def test_example_stage_three_closed_form():
    ss = solve(system(EXAMPLE_ROWS))
    assert_conserved(ss)
    assert (ss.n_finite, ss.n_diverged, ss.n_failed) == (3, 9, 0)
    assert ss.cluster_sizes == [1, 1, 1]
    assert match_sets(ss.solutions, example_closed_form(), 1e-8)
    assert max(ss.residuals) <= 1e-10
    assert min(ss.jacobian_min_singular_value) > 1e-3


def test_expanded_and_factored_refinement_agree():
    a = solve(system(EXAMPLE_ROWS))
    b = solve(expanded_system(EXAMPLE_ROWS))
    assert np.allclose(a.solutions, b.solutions, atol=1e-12)


def test_example_stage_two():
    ss = solve(system([[1, 0], [1, -1], [1, 1]]))
    assert (ss.n_finite, ss.n_failed) == (6, 0)
    assert match_sets(ss.solutions, plane_critical_points([[1, 0], [1, -1], [1, 1]]), 1e-8)


@pytest.mark.parametrize("n", range(2, 9))
def test_plane_arrangements_match_root_finding(n):
    rows = [[1, k] for k in range(n)]
    ss = solve(system(rows), TrackerOptions(seed=n))
    assert_conserved(ss)
    assert ss.n_finite == n * (n - 1) and ss.n_failed == 0
    assert match_sets(ss.solutions, plane_critical_points(rows), 1e-8)


@pytest.mark.parametrize("t", [Fraction(1), Fraction(1, 10), Fraction(1, 100)])
def test_family_solution_norms(t):
    ss = solve(system(qt_rows(t)))
    assert ss.n_finite == 3 and ss.n_failed == 0
    assert ss.max_norm == pytest.approx(qt_solution_norm(t), rel=1e-8)


def test_degenerate_member_has_no_finite_solutions():
    ss = solve(system(qt_rows(0)))
    assert_conserved(ss)
    assert (ss.n_finite, ss.n_diverged, ss.n_failed) == (0, 12, 0)
    assert ss.max_norm == 0.0
    assert all(p.status == AT_INFINITY for p in ss.paths)


def test_generic_accounting_at_infinity():
    n = 4
    ss = solve(system([[1, 0, 0], [0, 1, 0], [1, 1, 1], [1, 2, 3]][::-1]))
    acc = classify(ss, n, 3, generic=True)
    assert acc.finite == n * (n - 1) * (n - 2) // 2
    assert acc.at_infinity == n * comb(n, 2) and acc.matches_generic
    assert acc.reliable


def test_ill_conditioned_four_space_regression():
    # solutions have norm about 110, where a coefficient-only residual scale
    # sits above the Newton tolerance
    rows = [[-5, -5, -1, -1], [1, -5, 4, -5], [-4, -2, 3, -1], [-4, -4, 5, -3]]
    for seed in (0, 10):
        ss = solve(system(rows), TrackerOptions(seed=seed))
        assert (ss.n_finite, ss.n_failed) == (4, 0)
        assert ss.max_norm > 50


def test_same_seed_is_bitwise_reproducible():
    a = solve(system([[1, 0, 0], [0, 1, 0], [1, 1, 1], [1, 2, 3]]), TrackerOptions(seed=4))
    b = solve(system([[1, 0, 0], [0, 1, 0], [1, 1, 1], [1, 2, 3]]), TrackerOptions(seed=4))
    assert np.array_equal(a.solutions, b.solutions)
    assert [p.status for p in a.paths] == [p.status for p in b.paths]


@pytest.mark.parametrize("rows", [
    EXAMPLE_ROWS,
    [[1, 0, 0], [0, 1, 0], [1, 1, 1], [1, 2, 3]],
    [[2, -1, 0], [1, 3, -2], [0, 1, 1], [1, -1, 4], [3, 2, 1]],
])
def test_result_does_not_depend_on_gamma(rows):
    sys = system(rows)
    a = solve(sys, TrackerOptions(seed=0))
    b = solve(sys, TrackerOptions(seed=12345))
    assert (a.n_finite, a.n_diverged, a.n_failed) == (b.n_finite, b.n_diverged, b.n_failed)
    assert np.allclose(a.solutions, b.solutions, atol=1e-6)


@pytest.mark.parametrize("rows", [EXAMPLE_ROWS, [[1, 0, 0], [0, 1, 0], [1, 1, 1], [1, 2, 3]]])
def test_solution_set_is_closed_under_roots_of_unity(rows):
    ss = solve(system(rows))
    zeta = np.exp(2j * np.pi / len(rows))
    assert match_sets(zeta * ss.solutions, ss.solutions, 1e-8)


def test_newton_refine_converges_nearby():
    sys = system(EXAMPLE_ROWS)
    exact = example_closed_form()[0]
    nr = newton_refine(exact * (1 + 1e-3), sys)
    assert nr.converged and not nr.singular
    assert np.linalg.norm(nr.point - exact) < 1e-12
    assert nr.residual <= 1e-10


def test_newton_refine_flags_singular_roots():
    x = MultiPoly.variable(2, 0)
    y = MultiPoly.variable(2, 1)
    one = MultiPoly.constant(2, 1)
    nr = newton_refine([1.0, 2.0], [(x - one) ** 2, y - 2 * one])
    assert not nr.converged and nr.singular


def test_newton_refine_far_from_root_does_not_converge():
    nr = newton_refine([50.0, -70.0, 3.0], system(EXAMPLE_ROWS), max_iter=2)
    assert not nr.converged


def test_options_validation():
    with pytest.raises(ValueError):
        TrackerOptions(step_min=1.0)
    with pytest.raises(ValueError):
        TrackerOptions(newton_tol=0)
    with pytest.raises(ValueError):
        TrackerOptions(max_retries=-1)


def test_trace_has_one_line_per_path():
    ss = solve(system(EXAMPLE_ROWS))
    lines = format_trace(ss).splitlines()
    assert len(lines) == 12
    assert sum(FINITE in line for line in lines) == 3
    assert not any(FAILED in line for line in lines)


def test_newton_refine_flags_points_on_the_arrangement():
    # (0, 0, 1) lies on x = 0 and x - y = 0, where the whole gradient of Q vanishes
    nr = newton_refine([0.0, 0.0, 1.0], system(EXAMPLE_ROWS))
    assert not nr.converged
    assert nr.singular or nr.residual > 1e-10
