import unittest

import numpy as np

from elicitest.core.exceptions import (
    DegenerateInputError,
    DomainError,
    InvalidObservationError,
    UnknownFunctionalError,
    UnsupportedPairError,
    UnsupportedScoreError,
)
from elicitest.core.functionals import Mean, MeanSd, Quantile, Regression, VarCvar, get_functional, ident, ident_bound, score
from elicitest.core.references import (
    AR1Reference,
    BetaReference,
    DiscreteReference,
    GaussianReference,
    true_value,
)


class TestScoresAndIdents(unittest.TestCase):
    """Catalog formulas evaluated by hand."""

    def test_mean_score(self) -> None:
        f = get_functional("mean")
        self.assertEqual(score(f, 0.4, 0.4), 0.0)
        self.assertAlmostEqual(score(f, 0.4, 0.3), 0.005)

    def test_quantile_score_at_median(self) -> None:
        self.assertAlmostEqual(score(get_functional("quantile:0.5"), 0.0, 1.0), 0.5)

    def test_quantile_score_gradient_is_minus_ident(self) -> None:
        f = Quantile(0.1, (0.0, 1.0))
        xs = np.array([[0.05], [0.5], [0.95]])
        np.testing.assert_allclose(f.score_gradients(0.3, xs), -f.idents(0.3, xs))

    def test_mean_sd_ident(self) -> None:
        np.testing.assert_allclose(ident(get_functional("mean_sd"), (0.4, 0.4), 0.3), [0.1, 0.23])

    def test_quantile_ident(self) -> None:
        np.testing.assert_allclose(ident(get_functional("quantile:0.05"), 0.1, 0.2), [0.95])

    def test_var_cvar_ident(self) -> None:
        np.testing.assert_allclose(ident(get_functional("var_cvar:0.05"), (0.2, 0.1), 0.15), [0.95, 0.145])

    def test_mean_sd_has_no_score(self) -> None:
        with self.assertRaises(UnsupportedScoreError):
            score(MeanSd((0.0, 1.0)), (0.4, 0.4), 0.3)

    def test_regression_gradient_scales_ident(self) -> None:
        f = Regression(2)
        xs = np.array([[1.0, 0.5, -2.0], [0.3, 3.0, 4.0]])
        lam = np.array([0.2, -0.1])
        scaled = f.subgradient_scale(xs)[:, None] * f.idents(lam, xs)
        np.testing.assert_allclose(f.score_gradients(lam, xs), scaled)

    def test_regression_zero_covariates(self) -> None:
        f = Regression(1)
        xs = np.array([[1.0, 0.0], [1.0, 2.0]])
        with self.assertRaises(DegenerateInputError):
            f.idents(0.5, xs)
        lenient = f.idents(0.5, xs, strict=False)
        self.assertEqual(lenient[0, 0], 0.0)
        np.testing.assert_array_equal(f.degenerate_rows(xs), [True, False])


class TestBoundsAndDomains(unittest.TestCase):
    """Λ membership and ‖m‖ bounds."""

    def test_ident_bounds(self) -> None:
        self.assertAlmostEqual(ident_bound(get_functional("quantile:0.05")), 0.95)
        self.assertAlmostEqual(ident_bound(get_functional("quantile:0.5")), 0.5)
        self.assertIsNone(ident_bound(get_functional("mean")))

    def test_mean_bound_with_range(self) -> None:
        self.assertAlmostEqual(Mean((0.0, 1.0)).ident_bound(0.4), 0.6)

    def test_var_cvar_ordering(self) -> None:
        f = VarCvar(0.05, (0.0, 1.0))
        self.assertTrue(f.in_domain((0.2, 0.1)))
        self.assertFalse(f.in_domain((0.1, 0.2)))
        with self.assertRaises(DomainError):
            f.score((0.1, 0.2), 0.5)

    def test_param_outside_range(self) -> None:
        with self.assertRaises(DomainError):
            Mean((0.0, 1.0)).score(2.0, 0.5)

    def test_mean_sd_domain_bounds(self) -> None:
        lower, upper = MeanSd((0.0, 1.0)).domain_bounds()
        np.testing.assert_allclose(lower, [0.0, 0.0])
        np.testing.assert_allclose(upper, [1.0, 0.5])

    def test_bad_observation(self) -> None:
        with self.assertRaises(InvalidObservationError):
            score(get_functional("mean"), 0.0, float("nan"))
        with self.assertRaises(InvalidObservationError):
            ident(get_functional("regression:1"), 0.0, [1.0, 2.0, 3.0])


class TestCatalogLookup(unittest.TestCase):
    def test_ids_round_trip(self) -> None:
        for spec_id in ("mean", "quantile:0.1", "regression:2", "mean_sd", "var_cvar:0.05"):
            self.assertEqual(get_functional(spec_id).id, spec_id)

    def test_unknown_and_malformed(self) -> None:
        with self.assertRaises(UnknownFunctionalError):
            get_functional("median")
        with self.assertRaises(UnknownFunctionalError):
            get_functional("quantile:abc")
        with self.assertRaises(DomainError):
            get_functional("quantile:1.5")
        with self.assertRaises(DomainError):
            get_functional("mean", (1.0, 0.0))


class TestTrueValues(unittest.TestCase):
    """Ground-truth oracles on the reference laws."""

    @classmethod
    def setUpClass(cls) -> None:
        cls.beta = BetaReference(2.0, 5.0)

    def test_mean_sd_beta(self) -> None:
        np.testing.assert_allclose(true_value(MeanSd((0.0, 1.0)), self.beta), [2 / 7, 0.159719141], atol=1e-6)

    def test_var_cvar_beta(self) -> None:
        v, c = true_value(VarCvar(0.05, (0.0, 1.0)), self.beta)
        self.assertAlmostEqual(v, 0.06, delta=0.01)
        self.assertAlmostEqual(c, 0.04, delta=0.01)
        self.assertLess(c, v)

    def test_quantile_upper_tail(self) -> None:
        value = true_value(Quantile(0.05), self.beta)[0]
        self.assertAlmostEqual(self.beta.cdf(value), 0.95, places=8)

    def test_gaussian_mean(self) -> None:
        self.assertEqual(true_value(Mean(), GaussianReference(0.0, 1.0))[0], 0.0)

    def test_discrete_references(self) -> None:
        ref = DiscreteReference((1.0, 0.0), (0.5, 0.5))
        self.assertEqual(ref.atoms, (0.0, 1.0))
        self.assertEqual(true_value(Mean(), ref)[0], 0.5)
        np.testing.assert_allclose(true_value(VarCvar(0.25), ref), [0.0, 0.0])

    def test_ar1_coefficient(self) -> None:
        self.assertEqual(true_value(Regression(1), AR1Reference(0.5, 0.8))[0], 0.5)

    def test_unsupported_pairs(self) -> None:
        with self.assertRaises(UnsupportedPairError):
            true_value(Regression(1), self.beta)
        with self.assertRaises(UnsupportedPairError):
            true_value(Quantile(0.1), AR1Reference(0.5))


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
