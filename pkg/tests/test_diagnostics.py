import numpy as np
import pytest

from affproj.diagnostics import (check_b_prime, check_condition_b, check_fejer,
                                 condition_report, count_fejer_violations,
                                 running_sum_of_squares)
from affproj.linalg import norm
from affproj.oracle import direct_projection, stack
from affproj.sets import RowConstraintSet
from affproj.solver import (All, LastQ, StepDecomposition, StoppingRule,
                            run_alg1, run_map)


def random_family(seed, dim=10, k=3, codim=2):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(dim)
    sets = [RowConstraintSet(C := rng.standard_normal((codim, dim)), C @ z)
            for _ in range(k)]
    return sets, rng.standard_normal(dim), z


def test_fejer_constant_trace_has_zero_margin():
    p = np.array([1.0, 2.0])
    assert check_fejer([p, p, p], [0.0, 0.0]) == 0.0


def test_fejer_detects_a_corrupted_trace():
    m = np.zeros(2)
    good = [np.array([4.0, 0.0]), np.array([2.0, 0.0]), np.array([1.0, 0.0])]
    assert check_fejer(good, m) <= 0.0
    corrupted = [good[0], good[1], np.array([3.0, 0.0])]
    assert check_fejer(corrupted, m) == pytest.approx(1.0)
    viol, worst = count_fejer_violations(corrupted, m)
    assert viol == 1 and worst == pytest.approx(1.0)


def test_fejer_nonpositive_on_alternating_projection_runs():
    sets, x0, member = random_family(1)
    r = run_map(sets, x0, stop=StoppingRule(1e-10, 2000))
    assert r.converged
    assert check_fejer(r.points(), member) <= 1e-9


def test_condition_b_zero_when_nothing_moved():
    x0 = np.array([1.0, 2.0, 3.0])
    assert check_condition_b(x0, x0, [np.array([1.0, 0.0, 0.0])]) == 0.0


def test_condition_b_measures_span_distance():
    x0 = np.array([1.0, 1.0, 0.0])
    xi = np.zeros(3)
    # x0 - xi = (1,1,0); the single normal spans the first axis only
    res = check_condition_b(x0, xi, [np.array([2.0, 0.0, 0.0])])
    assert res == pytest.approx(1.0)
    # adding the second axis closes the gap
    res2 = check_condition_b(x0, xi, [np.array([2.0, 0.0, 0.0]),
                                      np.array([0.0, 1.0, 0.0])])
    assert res2 == pytest.approx(0.0, abs=1e-12)


def test_condition_b_ignores_zero_normals():
    x0 = np.array([1.0, 0.0])
    res = check_condition_b(x0, np.zeros(2), [np.zeros(2), np.array([1.0, 0.0])])
    assert res == pytest.approx(0.0, abs=1e-12)


def test_condition_b_small_under_full_window():
    sets, x0, _ = random_family(2)
    r = run_alg1(sets, x0, policy=All(), stop=StoppingRule(1e-10, 400))
    rep = condition_report(r)
    assert rep.condition_b_residuals
    assert max(rep.condition_b_residuals) <= 1e-8


def test_condition_b_generally_positive_under_short_window():
    sets, x0, _ = random_family(3, dim=12, k=3, codim=3)
    r = run_alg1(sets, x0, policy=LastQ(2), stop=StoppingRule(1e-10, 400))
    rep = condition_report(r)
    assert max(rep.condition_b_residuals) > 1e-6


def test_plain_alternation_has_unit_decomposition_ratio():
    sets, x0, _ = random_family(4)
    r = run_map(sets, x0, stop=StoppingRule(1e-10, 2000))
    ratios = check_b_prime(r.decompositions)
    assert ratios
    assert max(abs(t - 1.0) for t in ratios) <= 1e-9


def test_zero_step_iterations_are_skipped_not_nan():
    ratios = check_b_prime([StepDecomposition(components=0.0, steps=0.0),
                            StepDecomposition(components=2.0, steps=1.0)])
    assert ratios == [2.0]


def test_windowed_runs_have_finite_ratios():
    sets, x0, _ = random_family(5)
    r = run_alg1(sets, x0, policy=LastQ(3), stop=StoppingRule(1e-10, 400))
    ratios = check_b_prime(r.decompositions)
    assert ratios
    assert all(np.isfinite(t) for t in ratios)


def test_running_sum_of_squares_is_nondecreasing_and_bounded():
    sets, x0, member = random_family(6)
    r = run_map(sets, x0, stop=StoppingRule(1e-10, 2000))
    series = running_sum_of_squares(r.decompositions)
    assert all(b >= a for a, b in zip(series[:-1], series[1:]))
    assert series[-1] <= norm(x0 - member) ** 2 + 1e-6
    oracle = direct_projection(x0, stack(sets))
    assert series[-1] <= norm(x0 - oracle) ** 2 + 1e-6


def test_condition_report_aggregates_all_monitors():
    sets, x0, member = random_family(7)
    r = run_alg1(sets, x0, policy=All(), stop=StoppingRule(1e-10, 400))
    rep = condition_report(r, member)
    assert rep.fejer_violations == 0
    assert rep.fejer_worst <= 1e-9
    assert rep.condition_b_residuals and max(rep.condition_b_residuals) <= 1e-8
    assert rep.b_prime_ratios
    assert rep.sum_of_squares == running_sum_of_squares(r.decompositions)
