import math
import unittest

import numpy as np

from elicitest.betting.strategies import FollowTheLeader, get_strategy
from elicitest.core.domains import Ball
from elicitest.core.families import bounded_identifiable
from elicitest.core.functionals import Mean, MeanSd
from elicitest.inference.exceptions import InferenceConfigurationError
from elicitest.inference.sequential import (
    check_alpha,
    first_crossing,
    log_threshold,
    run_set_test,
    run_test,
)


def _mean_family(null: float = 0.4, **options):
    return bounded_identifiable(Mean((0.0, 1.0)), null, **options)


class TestThresholds(unittest.TestCase):
    """Strict Ville crossing of log(1/α)."""

    def test_first_crossing(self) -> None:
        self.assertEqual(first_crossing(np.log([0.5, 2.0, 25.0]), 0.05), 3)
        self.assertIsNone(first_crossing([log_threshold(0.05)], 0.05))
        self.assertIsNone(first_crossing([], 0.05))

    def test_threshold_value(self) -> None:
        self.assertAlmostEqual(log_threshold(0.05), math.log(20.0))

    def test_check_alpha(self) -> None:
        for bad in (0.0, 1.0, -0.1, 2.0):
            with self.assertRaises(InferenceConfigurationError):
                check_alpha(bad)
        self.assertEqual(check_alpha(0.1), 0.1)


class TestRunTest(unittest.TestCase):
    """Single-null tests driven by a strategy."""

    def setUp(self) -> None:
        self.beta_draws = [np.random.default_rng(seed).beta(2.0, 5.0, 500) for seed in range(5)]

    def test_zero_domain_never_rejects(self) -> None:
        fam = _mean_family(0.9, theta_domain=Ball([0.0], 0.0))
        outcome = run_test(fam, "ftl", self.beta_draws[0], 0.05)
        self.assertFalse(outcome.rejected)
        self.assertEqual(outcome.final_log_wealth, 0.0)
        self.assertEqual(outcome.steps, 500)

    def test_mean_sd_alternative_is_rejected(self) -> None:
        for xs in self.beta_draws:
            fam = bounded_identifiable(MeanSd((0.0, 1.0)), (0.5, 0.2))
            outcome = run_test(fam, "ftl", xs, 0.05)
            self.assertTrue(outcome.rejected)
            self.assertEqual(outcome.steps, outcome.rejected_at)
            self.assertGreater(outcome.final_log_wealth, math.log(20.0))

    def test_continue_after_rejection(self) -> None:
        xs = self.beta_draws[1]
        stopped = run_test(_mean_family(0.6), "ftl", xs, 0.05)
        continued = run_test(_mean_family(0.6), "ftl", xs, 0.05, continue_after_rejection=True)
        self.assertEqual(stopped.rejected_at, continued.rejected_at)
        self.assertEqual(continued.steps, len(xs))
        self.assertGreaterEqual(continued.running_max_log_wealth, stopped.final_log_wealth)

    def test_callbacks_and_path_recording(self) -> None:
        seen = []
        xs = self.beta_draws[2][:40]
        outcome = run_test(_mean_family(), "ogd", xs, 0.05, on_step=seen.append, record_path=False)
        self.assertEqual(len(seen), outcome.steps)
        self.assertEqual(outcome.log_wealth_path, [])
        self.assertEqual(seen[0]["theta"], [0.0])
        self.assertAlmostEqual(seen[-1]["log_wealth"], outcome.final_log_wealth)

        recorded = run_test(_mean_family(), "ogd", xs, 0.05)
        self.assertEqual(len(recorded.log_wealth_path), recorded.steps)
        self.assertAlmostEqual(recorded.final_log_wealth, outcome.final_log_wealth)

    def test_strategy_family_mismatch(self) -> None:
        strat = FollowTheLeader(_mean_family(0.3))
        with self.assertRaises(InferenceConfigurationError):
            run_test(_mean_family(0.4), strat, [0.5], 0.05)

    def test_bad_alpha(self) -> None:
        with self.assertRaises(InferenceConfigurationError):
            run_test(_mean_family(), "ftl", [0.5], 1.5)

    def test_summary_keys(self) -> None:
        summary = run_test(_mean_family(), "ftl", [0.5, 0.4], 0.05).summary()
        self.assertEqual(summary["steps"], 2)
        self.assertFalse(summary["rejected"])
        self.assertNotIn("member_log_wealth", summary)


class TestSetTest(unittest.TestCase):
    """Composite nulls through the minimum over a grid of e-processes."""

    def setUp(self) -> None:
        self.xs = np.random.default_rng(9).beta(2.0, 5.0, 300)

    def test_singleton_set_matches_single_test(self) -> None:
        single = run_test(_mean_family(0.6), "ftl", self.xs, 0.05, continue_after_rejection=True)
        grouped = run_set_test([_mean_family(0.6)], "ftl", self.xs, 0.05, continue_after_rejection=True)
        np.testing.assert_allclose(grouped.log_wealth_path, single.log_wealth_path)
        self.assertEqual(grouped.rejected_at, single.rejected_at)
        self.assertEqual(len(grouped.member_log_wealth), 1)

    def test_unit_member_blocks_rejection(self) -> None:
        fams = [_mean_family(0.4, theta_domain=Ball([0.0], 0.0)), _mean_family(0.8)]
        outcome = run_set_test(fams, "ftl", self.xs, 0.05)
        self.assertFalse(outcome.rejected)
        self.assertEqual(outcome.final_log_wealth, 0.0)
        self.assertGreater(outcome.member_log_wealth[1], math.log(20.0))

    def test_whole_set_rejected(self) -> None:
        fams = [_mean_family(null) for null in (0.6, 0.7, 0.8)]
        outcome = run_set_test(fams, "ftl", self.xs, 0.05)
        self.assertTrue(outcome.rejected)
        self.assertGreater(min(outcome.member_log_wealth), math.log(20.0))

    def test_bad_inputs(self) -> None:
        with self.assertRaises(InferenceConfigurationError):
            run_set_test([], "ftl", self.xs, 0.05)
        fams = [_mean_family(0.6), _mean_family(0.7)]
        with self.assertRaises(InferenceConfigurationError):
            run_set_test(fams, [get_strategy("ftl", fams[0])], self.xs, 0.05)


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
