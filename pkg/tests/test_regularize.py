import math
import unittest

import numpy as np

from conftest import EXAMPLE_A, EXAMPLE_Y, random_instance
from tropreg.maxplus import NEG_INF
from tropreg.regularize import (
    IrslsConfig,
    augmented_objective,
    brute_force_inner,
    irsls,
    newton_inner,
    regularized_objective,
)
from tropreg.solvers import RegressionProblem, brute_force_solve
from tropreg.utils.seeding import get_rng


class TestObjective(unittest.TestCase):
    def test_unregularized_value_is_squared_residual(self):
        value = regularized_objective(EXAMPLE_A, EXAMPLE_Y, 0.0, [0.5, 0.0])
        self.assertTrue(math.isclose(value.value, 0.5))

    def test_penalty(self):
        value = regularized_objective(EXAMPLE_A, EXAMPLE_Y, 2.0, [0.5, 0.0])
        self.assertTrue(math.isclose(value.value, 0.5 + 2.0 * 0.5))

    def test_infinite_residual_dominates(self):
        value = regularized_objective(EXAMPLE_A, EXAMPLE_Y, 1.0, [NEG_INF, NEG_INF])
        self.assertEqual(value.value, math.inf)
        finite = regularized_objective(EXAMPLE_A, EXAMPLE_Y, 1.0, [100.0, 100.0])
        self.assertLess(finite, value)

    def test_more_bottom_coordinates_rank_first(self):
        A = np.array([[NEG_INF, 0.0]])
        y = np.array([0.0])
        sparse = regularized_objective(A, y, 1.0, [NEG_INF, 0.0])
        dense = regularized_objective(A, y, 1.0, [-5.0, 0.0])
        self.assertLess(sparse, dense)
        self.assertEqual(sparse.value, -math.inf)

    def test_no_bonus_without_penalty(self):
        A = np.array([[NEG_INF, 0.0]])
        y = np.array([0.0])
        sparse = regularized_objective(A, y, 0.0, [NEG_INF, 0.0])
        dense = regularized_objective(A, y, 0.0, [-5.0, 0.0])
        self.assertEqual(sparse, dense)

    def test_negative_penalty(self):
        with self.assertRaises(ValueError):
            regularized_objective(EXAMPLE_A, EXAMPLE_Y, -1.0, [0.0, 0.0])

    def test_augmented_problem_tracks_objective(self):
        # the two objectives differ by a constant up to second order in x - x_prev
        rng = get_rng(0)
        lam, delta = 3.0, 1e-4
        for _ in range(100):
            A, y = random_instance(rng, 4, 3)
            x_prev = rng.uniform(-5, 5, size=3)
            x = x_prev + delta * rng.uniform(-1, 1, size=3)

            def gap(point):
                return augmented_objective(A, y, lam, point, x_prev) - regularized_objective(A, y, lam, point).value

            self.assertTrue(math.isclose(gap(x), gap(x_prev), abs_tol=1e-6))


class _RecordingInner:
    def __init__(self, inner):
        self.inner = inner
        self.starts = []

    def __call__(self, problem, x_start):
        self.starts.append(np.array(x_start))
        return self.inner(problem, x_start)


class TestIrsls(unittest.TestCase):
    def test_unconstrained_coordinate_is_pulled_to_bottom(self):
        # column 2 feeds no row, so only the penalty acts on it
        A = np.array([[0.0, NEG_INF], [0.0, NEG_INF]])
        y = np.array([1.0, 1.0])
        inner = _RecordingInner(newton_inner)
        report = irsls(A, y, 10.0, [1.0, 0.0], inner_solver=inner)

        self.assertEqual(report.solution[1], NEG_INF)
        self.assertTrue(math.isclose(report.solution[0], -1.5, abs_tol=1e-5))
        self.assertEqual(report.counters["snapped"], 1)
        self.assertEqual(report.counters["converged"], 1)

        free = [s[1] for s in inner.starts if len(s) == 2]
        steps = np.diff(free)
        np.testing.assert_allclose(steps, -5.0, atol=1e-9)
        sizes = [len(s) for s in inner.starts]
        self.assertEqual(sizes, sorted(sizes, reverse=True))

    def test_zero_penalty_keeps_optimum(self):
        rng = get_rng(1)
        for _ in range(5):
            A, y = random_instance(rng, 4, 2)
            exact = brute_force_solve(RegressionProblem(A, y))
            if not np.isfinite(exact.solution).all():
                continue
            report = irsls(A, y, 0.0, exact.solution, inner_solver=brute_force_inner)
            self.assertTrue(math.isclose(report.residual_2norm ** 2, exact.residual_2norm ** 2, abs_tol=1e-8))

    def test_infeasible_instance(self):
        report = irsls([[0.0], [0.0]], [NEG_INF, 1.0], 1.0, [0.0])
        self.assertEqual(report.verdict, "infeasible")
        self.assertEqual(report.solver, "irsls")

    def test_bottom_start_coordinates_stay_snapped(self):
        report = irsls(EXAMPLE_A, EXAMPLE_Y, 1.0, [NEG_INF, 0.0])
        self.assertEqual(report.solution[0], NEG_INF)
        self.assertEqual(report.counters["snapped"], 1)

    def test_start_must_cover_every_row(self):
        A = np.array([[0.0, NEG_INF], [0.0, 0.0]])
        with self.assertRaises(ValueError):
            irsls(A, [1.0, 1.0], 1.0, [NEG_INF, 0.0])
        with self.assertRaises(ValueError):
            irsls(EXAMPLE_A, EXAMPLE_Y, 1.0, [NEG_INF, NEG_INF])

    def test_overrides(self):
        report = irsls(EXAMPLE_A, EXAMPLE_Y, 1.0, [0.5, 0.0], max_outer=2)
        self.assertLessEqual(report.counters["outer_iterations"], 2)

    def test_config_validation(self):
        for kwargs in ({"tol": 0.0}, {"max_outer": 0}, {"snap_patience": 0}):
            with self.assertRaises(ValueError):
                IrslsConfig(**kwargs)


def test_penalty_lowers_coordinates():
    report = irsls(EXAMPLE_A, EXAMPLE_Y, 1.0, [0.5, 0.0])
    unregularized = regularized_objective(EXAMPLE_A, EXAMPLE_Y, 1.0, [0.5, 0.0])
    regularized = regularized_objective(EXAMPLE_A, EXAMPLE_Y, 1.0, report.solution)
    assert regularized <= unregularized
