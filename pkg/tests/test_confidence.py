import itertools
import unittest

import numpy as np

from elicitest.betting.strategies import OnlineGradientDescent
from elicitest.core.families import bounded_identifiable
from elicitest.core.functionals import Mean, VarCvar
from elicitest.inference.confidence import (
    build_confidence_grid,
    covers,
    iter_confidence_sequence,
    lambda_grid,
    nearest_candidate,
    run_confidence_sequence,
    update_confidence,
)
from elicitest.inference.exceptions import InferenceConfigurationError


def _factory(lam):
    return bounded_identifiable(Mean((0.0, 1.0)), lam)


class TestLambdaGrid(unittest.TestCase):
    """Candidate grids over Λ."""

    def test_regular_grid(self) -> None:
        grid = lambda_grid(Mean((0.0, 1.0)), 11)
        self.assertEqual(grid.shape, (11, 1))
        self.assertAlmostEqual(grid[5, 0], 0.5)

    def test_single_point(self) -> None:
        np.testing.assert_array_equal(lambda_grid(Mean((0.0, 1.0)), 1), [[0.0]])

    def test_ordering_is_enforced(self) -> None:
        grid = lambda_grid(VarCvar(0.05, (0.0, 1.0)), 5)
        self.assertLess(len(grid), 25)
        self.assertTrue(np.all(grid[:, 1] <= grid[:, 0]))

    def test_unbounded_or_empty(self) -> None:
        with self.assertRaises(InferenceConfigurationError):
            lambda_grid(Mean(), 11)
        with self.assertRaises(InferenceConfigurationError):
            lambda_grid(Mean((0.0, 1.0)), 0)
        with self.assertRaises(InferenceConfigurationError):
            build_confidence_grid([], _factory, "ftl", 0.05)


class TestConfidenceSequence(unittest.TestCase):
    """Grid inversion of the sequential test."""

    def setUp(self) -> None:
        self.lambdas = np.linspace(0.0, 1.0, 11)
        self.xs = np.tile([0.0, 1.0], 100)

    def test_starts_full(self) -> None:
        grid = build_confidence_grid(self.lambdas, _factory, "ftl", 0.01)
        self.assertEqual(grid.grid.shape, (11, 1))
        self.assertTrue(np.all(grid.mask))
        self.assertEqual(grid.snapshot().t, 0)

    def test_balanced_binary_stream(self) -> None:
        grid = build_confidence_grid(self.lambdas, _factory, "ftl", 0.01)
        updates = run_confidence_sequence(grid, self.xs)
        self.assertEqual(len(updates), len(self.xs))
        final = updates[-1]
        self.assertTrue(final.mask[5])
        self.assertFalse(final.mask[0])
        self.assertFalse(final.mask[10])
        lower, upper = final.hull
        self.assertLessEqual(lower[0], 0.5)
        self.assertGreaterEqual(upper[0], 0.5)
        self.assertTrue(covers(grid, 0.5))
        self.assertFalse(covers(grid, 0.0))
        self.assertEqual(nearest_candidate(grid, 0.52), 5)

    def test_unbounded_stream_is_consumed_lazily(self) -> None:
        grid = build_confidence_grid(self.lambdas, _factory, "ftl", 0.01)
        endless = itertools.cycle([0.0, 1.0])
        updates = iter_confidence_sequence(grid, endless)
        self.assertEqual(grid.t, 0)
        first = list(itertools.islice(updates, 5))
        self.assertEqual([u.t for u in first], [1, 2, 3, 4, 5])
        self.assertEqual(grid.t, 5)
        self.assertEqual(next(updates).t, 6)

    def test_masks_only_shrink(self) -> None:
        grid = build_confidence_grid(self.lambdas, _factory, "ftl", 0.01)
        previous = grid.mask.copy()
        for x in self.xs[:60]:
            current = update_confidence(grid, x).mask
            self.assertTrue(np.all(current <= previous))
            previous = current

    def test_excluded_candidates_are_frozen(self) -> None:
        grid = build_confidence_grid(self.lambdas, _factory, "ftl", 0.01)
        run_confidence_sequence(grid, self.xs)
        self.assertLess(grid.strategies[0].t, len(self.xs))
        self.assertEqual(grid.strategies[5].t, len(self.xs))

    def test_rows_and_callback(self) -> None:
        grid = build_confidence_grid(self.lambdas, _factory, "ftl", 0.01)
        rows = []
        run_confidence_sequence(grid, self.xs[:4], on_step=lambda u: rows.append(u.to_row()))
        self.assertEqual([r["t"] for r in rows], [1, 2, 3, 4])
        self.assertEqual(rows[0]["members"], 11)
        self.assertEqual(len(rows[0]["mask"]), 11)

    def test_custom_strategy_builder(self) -> None:
        grid = build_confidence_grid(self.lambdas[:3], _factory, OnlineGradientDescent, 0.05)
        self.assertEqual(len(grid.strategies), 3)
        self.assertEqual(grid.strategies[0].algorithm.value, "ogd")


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
