import io
import json
import math
import unittest
from unittest import mock

import numpy as np

from elicitest.betting.exceptions import MixtureWeightsError
from elicitest.betting.ledger import LedgerRow, RegretLedger, best_fixed_bet, fixed_bet_log_wealth, regret
from elicitest.betting.mixture import MixtureWeights, mixture_log_wealth, mixture_step
from elicitest.betting.strategies import FollowTheLeader
from elicitest.core.exceptions import NonpositiveIncrementError
from elicitest.core.families import (
    FamilySpec,
    bounded_identifiable,
    log_increment,
    log_wealth_path,
    sub_psi_identifiable,
)
from elicitest.core.functionals import Mean
from elicitest.core.tail_models import gaussian


class TestMixture(unittest.TestCase):
    """Static mixtures of fixed bets."""

    def setUp(self) -> None:
        self.fam = bounded_identifiable(Mean((0.0, 1.0)), 0.4)

    def test_dirac_equals_single_bet(self) -> None:
        value = mixture_step(MixtureWeights.dirac([0.5]), self.fam, 0.7)
        self.assertAlmostEqual(value, math.log(1.15))
        self.assertAlmostEqual(value, log_increment(self.fam, [0.5], 0.7))

    def test_equal_atoms_collapse(self) -> None:
        value = mixture_step(MixtureWeights.uniform([[0.5], [0.5]]), self.fam, 0.7)
        self.assertAlmostEqual(value, math.log(1.15))

    def test_two_point_mixture(self) -> None:
        value = mixture_step(MixtureWeights([[0.5], [-0.5]], [0.5, 0.5]), self.fam, 0.7)
        self.assertAlmostEqual(value, math.log(0.5 * 1.15 + 0.5 * 0.85))

    def test_bad_weights(self) -> None:
        with self.assertRaises(MixtureWeightsError):
            MixtureWeights([[0.1], [0.2]], [0.7, 0.7])
        with self.assertRaises(MixtureWeightsError):
            MixtureWeights([[0.1], [0.2]], [1.0])
        with self.assertRaises(MixtureWeightsError):
            MixtureWeights([[0.1], [0.2]], [1.5, -0.5])

    def test_atom_outside_domain(self) -> None:
        with self.assertRaises(MixtureWeightsError):
            mixture_step(MixtureWeights.dirac([10.0]), self.fam, 0.5)

    def test_dead_atom_is_an_error(self) -> None:
        evaluate = FamilySpec.evaluate

        def killing_negative_bets(fam, theta, feats, need_grad=False):
            values, grads, factor = evaluate(fam, theta, feats, need_grad)
            if theta[0] < 0:
                return np.full(1, -np.inf), grads, np.zeros(1)
            return values, grads, factor

        with mock.patch.object(FamilySpec, "evaluate", killing_negative_bets):
            with self.assertRaises(NonpositiveIncrementError) as ctx:
                mixture_step(MixtureWeights([[0.5], [-0.5]], [0.5, 0.5]), self.fam, 0.7, step=4)
            self.assertEqual(ctx.exception.step, 4)
            value = mixture_step(MixtureWeights([[0.5], [-0.5]], [1.0, 0.0]), self.fam, 0.7)
        self.assertAlmostEqual(value, math.log(1.15))

    def test_nan_increment_is_an_error(self) -> None:
        gaussian_fam = sub_psi_identifiable(Mean(), 0.0, gaussian(1.0), mode="scaled", radius=1.0)

        def nan_increment(fam, theta, feats, need_grad=False):
            return np.full(1, np.nan), None, None

        with mock.patch.object(FamilySpec, "evaluate", nan_increment):
            with self.assertRaises(NonpositiveIncrementError):
                mixture_step(MixtureWeights.dirac([0.5]), gaussian_fam, 0.7)

    def test_dirac_path_matches_fixed_bet_path(self) -> None:
        xs = np.random.default_rng(5).uniform(0.0, 1.0, 50)
        np.testing.assert_allclose(
            mixture_log_wealth(MixtureWeights.dirac([0.3]), self.fam, xs),
            log_wealth_path(self.fam, [0.3], xs),
        )


class TestLedger(unittest.TestCase):
    """Fixed-bet wealth, best bet in hindsight and regret bookkeeping."""

    def setUp(self) -> None:
        self.bounded = bounded_identifiable(Mean((0.0, 1.0)), 0.4)
        self.gaussian = sub_psi_identifiable(Mean(), 0.0, gaussian(1.0), mode="scaled", radius=10.0)

    def test_inadmissible_bet_has_no_wealth(self) -> None:
        feats = self.bounded.features([0.0, 0.1])
        self.assertEqual(fixed_bet_log_wealth(self.bounded, [10.0], feats), -np.inf)

    def test_best_fixed_bet_closed_form(self) -> None:
        result = best_fixed_bet(self.gaussian, self.gaussian.features([1.0, 1.0]))
        np.testing.assert_allclose(result.theta, [1.0])
        self.assertAlmostEqual(result.value, 1.0)

    def test_best_fixed_bet_on_empty_history(self) -> None:
        result = best_fixed_bet(self.bounded, self.bounded.features(np.empty((0, 1))))
        np.testing.assert_array_equal(result.theta, [0.0])
        self.assertEqual(result.value, 0.0)

    def test_best_fixed_bet_by_search(self) -> None:
        feats = self.bounded.features([0.9, 0.8, 0.7])
        result = best_fixed_bet(self.bounded, feats)
        radius = self.bounded.theta_domain.radius
        self.assertGreaterEqual(result.value, fixed_bet_log_wealth(self.bounded, [0.5 * radius], feats) - 1e-9)
        self.assertAlmostEqual(result.theta[0], radius, places=4)

    def test_regret_is_zero_before_data(self) -> None:
        ledger = RegretLedger(self.bounded, lambda: self.bounded.features(np.empty((0, 1))))
        self.assertEqual(regret(ledger), 0.0)

    def test_rows_serialize(self) -> None:
        row = LedgerRow(3, [0.25], -0.1)
        self.assertEqual(json.loads(row.to_json()), {"t": 3, "theta": [0.25], "log_wealth": -0.1, "regret": None})

        strat = FollowTheLeader(self.gaussian, keep_rows=True)
        for x in (1.0, -1.0, 0.5):
            strat.step(x)
        handle = io.StringIO()
        strat.ledger.write_json_lines(handle)
        lines = handle.getvalue().splitlines()
        self.assertEqual([json.loads(line)["t"] for line in lines], [1, 2, 3])
        self.assertAlmostEqual(json.loads(lines[-1])["log_wealth"], strat.log_wealth)


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
