import math
import unittest

import numpy as np

from elicitest.betting import strategies
from elicitest.betting.exceptions import StrategyConfigurationError
from elicitest.betting.strategies import (
    Algorithm,
    FollowTheLeader,
    FollowTheLeaderPredictive,
    OnlineGradientDescent,
    StrategyState,
    get_strategy,
    ogd_update,
    proximal_strength,
    step,
)
from elicitest.core.domains import Ball, Box
from elicitest.core.families import bounded_identifiable, log_increment, sub_psi_identifiable
from elicitest.core.functionals import Mean
from elicitest.core.tail_models import gaussian


def _mean_family(**options):
    return bounded_identifiable(Mean((0.0, 1.0)), 0.4, **options)


def _gaussian_family(radius: float = 10.0):
    return sub_psi_identifiable(Mean(), 0.0, gaussian(1.0), mode="scaled", radius=radius)


class TestFollowTheLeader(unittest.TestCase):
    """FTL picks the best bet on the past and starts at the neutral point."""

    def setUp(self) -> None:
        strategies._WARNED.clear()

    def test_first_step_is_neutral(self) -> None:
        strat = get_strategy("ftl", _mean_family())
        np.testing.assert_array_equal(strat.theta, [0.0])
        self.assertEqual(strat.step(0.9), 0.0)
        self.assertEqual(strat.t, 1)

    def test_closed_form_leader(self) -> None:
        strat = FollowTheLeader(_gaussian_family(), keep_history=False)
        for x in (1.0, 1.0):
            strat.step(x)
        np.testing.assert_allclose(strat.theta, [1.0])
        self.assertIsNone(strat.state.history)

    def test_history_required_without_closed_form(self) -> None:
        with self.assertRaises(StrategyConfigurationError):
            FollowTheLeader(_mean_family(), keep_history=False)

    def test_singleton_domain_has_no_regret(self) -> None:
        strat = FollowTheLeader(_mean_family(theta_domain=Ball([0.0], 0.0)))
        for x in (0.1, 0.9, 0.5, 0.7):
            strat.step(x)
        self.assertEqual(strat.log_wealth, 0.0)
        self.assertAlmostEqual(strat.regret(), 0.0)

    def test_logarithmic_regret_on_quadratic_family(self) -> None:
        xs = np.random.default_rng(3).choice([-1.0, 1.0], 1000)
        strat = FollowTheLeader(_gaussian_family())
        for x in xs:
            strat.step(x)
        value = strat.regret()
        self.assertGreaterEqual(value, -1e-9)
        self.assertLessEqual(value, 2.0 * (1.0 + math.log(1000)))

    def test_step_function_returns_state(self) -> None:
        strat = FollowTheLeader(_gaussian_family())
        state, increment = step(strat, 1.0)
        self.assertIs(state, strat.state)
        self.assertEqual(increment, 0.0)
        np.testing.assert_allclose(state.theta_next, [1.0])

    def test_regret_checkpoints_in_ledger(self) -> None:
        strat = FollowTheLeader(_gaussian_family(), regret_every=5, keep_rows=True)
        for x in np.linspace(-1.0, 1.0, 10):
            strat.step(x)
        rows = strat.ledger.rows
        self.assertEqual(len(rows), 10)
        self.assertIsNone(rows[0].regret)
        self.assertIsNotNone(rows[4].regret)
        self.assertIsNotNone(rows[9].regret)


class TestRegularizedAndGradient(unittest.TestCase):
    """FTRL and OGD updates."""

    def test_ftrl_stays_put_on_null_data(self) -> None:
        strat = get_strategy("ftrl", _mean_family())
        for _ in range(5):
            self.assertAlmostEqual(strat.step(0.4), 0.0)
        np.testing.assert_allclose(strat.theta, [0.0], atol=1e-8)
        self.assertEqual(len(strat.state.sigmas), 5)

    def test_ogd_stays_put_on_null_data(self) -> None:
        strat = get_strategy("ogd", _mean_family())
        for _ in range(5):
            strat.step(0.4)
        np.testing.assert_array_equal(strat.theta, [0.0])

    def test_ogd_projection(self) -> None:
        fam = _mean_family(theta_domain=Box([-1.0], [1.0]))
        state = StrategyState(
            algo=Algorithm.OGD,
            theta_next=np.array([0.9]),
            history=None,
            gradient_bound=2.0,
            diam=2.0,
            certified=True,
            t=1,
        )
        np.testing.assert_allclose(ogd_update(state, fam, -0.3), [1.0])
        self.assertEqual(state.learning_rates, [1.0])

    def test_ogd_first_move_by_hand(self) -> None:
        fam = _mean_family()
        strat = OnlineGradientDescent(fam, gradient_bound=2.0)
        strat.step(0.9)
        diam = fam.theta_domain.diam
        np.testing.assert_allclose(strat.theta, fam.theta_domain.project([diam / 2.0 * 0.5]))

    def test_ogd_needs_gradient_bound(self) -> None:
        with self.assertRaises(StrategyConfigurationError):
            OnlineGradientDescent(_gaussian_family())

    def test_bad_gradient_bound(self) -> None:
        with self.assertRaises(StrategyConfigurationError):
            OnlineGradientDescent(_mean_family(), gradient_bound=0.0)

    def test_proximal_strengths_telescope(self) -> None:
        total = sum(proximal_strength(2.0, 4.0, i) for i in range(9))
        self.assertAlmostEqual(total, 0.5 * 3.0)


class TestPredictiveAndLookup(unittest.TestCase):
    def setUp(self) -> None:
        strategies._WARNED.clear()

    def test_empirical_predictive_matches_ftl(self) -> None:
        xs = np.random.default_rng(11).beta(2.0, 5.0, 30)
        fam = _mean_family()
        ftl = FollowTheLeader(fam)
        ftlp = FollowTheLeaderPredictive(fam)
        for x in xs:
            ftl.step(x)
            ftlp.step(x)
        np.testing.assert_allclose(ftlp.theta, ftl.theta, atol=1e-3)

    def test_unknown_strategy(self) -> None:
        with self.assertRaises(StrategyConfigurationError):
            get_strategy("adam", _mean_family())

    def test_lookup_is_case_insensitive(self) -> None:
        self.assertIsInstance(get_strategy(" OGD ", _mean_family()), OnlineGradientDescent)


class TestRegretAndPredictability(unittest.TestCase):
    """Regret per step shrinks and every bet is fixed before its observation arrives."""

    CHECKPOINTS = (100, 400)
    SEEDS = range(5)

    def setUp(self) -> None:
        strategies._WARNED.clear()

    def _average_regret(self, name: str) -> dict:
        totals = dict.fromkeys(self.CHECKPOINTS, 0.0)
        for seed in self.SEEDS:
            strat = get_strategy(name, _gaussian_family(radius=1.0), gradient_bound=5.0)
            xs = np.random.default_rng(seed).normal(0.3, 1.0, self.CHECKPOINTS[-1])
            for t, x in enumerate(xs, start=1):
                strat.step(x)
                if t in totals:
                    totals[t] += strat.regret() / len(self.SEEDS)
        return totals

    def test_regret_is_sublinear(self) -> None:
        early, late = self.CHECKPOINTS
        for name in ("ftl", "ogd", "ftrl"):
            with self.subTest(strategy=name):
                totals = self._average_regret(name)
                self.assertLess(totals[late] / late, totals[early] / early)
                if name != "ftl":
                    # G = 5, D = 2
                    self.assertLessEqual(totals[late], 1.5 * 5.0 * 2.0 * math.sqrt(late))

    def test_bet_does_not_see_its_observation(self) -> None:
        prefix = np.random.default_rng(8).normal(0.3, 1.0, 20)
        for name in ("ftl", "ftrl", "ogd", "ftlp"):
            with self.subTest(strategy=name):
                first = get_strategy(name, _gaussian_family(radius=1.0), gradient_bound=5.0, keep_rows=True)
                second = get_strategy(name, _gaussian_family(radius=1.0), gradient_bound=5.0, keep_rows=True)
                for x in prefix:
                    first.step(x)
                    second.step(x)
                bet = first.theta
                np.testing.assert_array_equal(bet, second.theta)

                up = first.step(2.5)
                down = second.step(-2.5)
                self.assertEqual(first.ledger.rows[-1].theta, second.ledger.rows[-1].theta)
                np.testing.assert_allclose(first.ledger.rows[-1].theta, bet)
                self.assertAlmostEqual(up, log_increment(first.family, bet, 2.5))
                self.assertAlmostEqual(down, log_increment(second.family, bet, -2.5))
                self.assertFalse(np.allclose(first.theta, second.theta))


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
