import csv
import json
import os
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np

from elicitest.betting.strategies import FollowTheLeader
from elicitest.core.families import bounded_identifiable
from elicitest.core.functionals import Mean
from elicitest.inference.sequential import run_test
from elicitest.simlab.artifacts import (
    PATH_HEADER,
    ConfseqWriter,
    PathWriter,
    run_dir,
    write_confseq_csv,
    write_json,
    write_path_csv,
    write_surface_csv,
)
from elicitest.simlab.exceptions import ArtifactExportError, ParamError, PresetError
from elicitest.simlab.generators import Generator, derive_seed, generate, iter_observations
from elicitest.simlab.montecarlo import (
    MonteCarloConfig,
    binomial_interval,
    growth_rate_oracle,
    monte_carlo,
    power_bound_gap,
    ville_margin,
)
from elicitest.simlab.presets import PRESET_NAMES, get_preset, run_preset
from elicitest.simlab.report import format_montecarlo_report_text, format_test_report_text


class TestGenerators(unittest.TestCase):
    """Seeded synthetic streams."""

    def test_same_seed_same_stream(self) -> None:
        g = Generator.iid_beta(2.0, 5.0, seed=3)
        np.testing.assert_array_equal(generate(g, 100), generate(g, 100))
        self.assertFalse(np.array_equal(generate(g, 100), generate(g.with_seed(4), 100)))
        np.testing.assert_array_equal(np.vstack(list(iter_observations(g, 10))), generate(g, 10))

    def test_discrete_mean(self) -> None:
        xs = generate(Generator.discrete((0.0, 1.0), (0.3, 0.7), seed=1), 1_000_000)
        self.assertAlmostEqual(float(xs.mean()), 0.7, delta=0.002)
        self.assertEqual(set(np.unique(xs)), {0.0, 1.0})

    def test_beta_mean(self) -> None:
        xs = generate(Generator.iid_beta(2.0, 5.0, seed=2), 200_000)
        self.assertAlmostEqual(float(xs.mean()), 2.0 / 7.0, delta=0.002)
        self.assertTrue(np.all((xs > 0.0) & (xs < 1.0)))

    def test_ar1_rows_carry_the_lag(self) -> None:
        xs = generate(Generator.ar1(0.5, 0.8, seed=5), 50)
        self.assertEqual(xs.shape, (50, 2))
        np.testing.assert_array_equal(xs[1:, 1], xs[:-1, 0])
        fixed = generate(Generator.ar1(0.5, 0.8, seed=5, stationary=False, x0=2.0), 3)
        self.assertEqual(fixed[0, 1], 2.0)

    def test_bad_parameters(self) -> None:
        with self.assertRaises(ParamError):
            Generator.iid_beta(0.0, 1.0)
        with self.assertRaises(ParamError):
            Generator.iid_gaussian(0.0, -1.0)
        with self.assertRaises(ParamError):
            Generator.ar1(1.0, 0.8)
        with self.assertRaises(ParamError):
            Generator.discrete((0.0, 1.0), (0.5, 0.6))
        with self.assertRaises(ParamError):
            Generator.iid_beta(2.0, 5.0, seed=-1)
        with self.assertRaises(ParamError):
            generate(Generator.iid_beta(2.0, 5.0), 0)

    def test_derived_seeds(self) -> None:
        seed = derive_seed(7, "mean_sd_beta", 0)
        self.assertEqual(seed, derive_seed(7, "mean_sd_beta", 0))
        self.assertNotEqual(seed, derive_seed(7, "mean_sd_beta", 1))
        self.assertNotEqual(seed, derive_seed(7, "ar1_coeff", 0))
        self.assertNotEqual(seed, derive_seed(8, "mean_sd_beta", 0))
        self.assertTrue(0 <= seed < 2 ** 64)


class TestPresets(unittest.TestCase):
    """Experiment presets and their runs."""

    def test_lookup(self) -> None:
        self.assertEqual(set(PRESET_NAMES), {"mean_sd_beta", "var_cvar_beta", "ar1_coeff"})
        with self.assertRaises(PresetError):
            get_preset("gamma_mean")

    def test_null_scenario_sits_at_truth(self) -> None:
        for name in PRESET_NAMES:
            preset = get_preset(name + ":null")
            self.assertTrue(preset.is_null)
            np.testing.assert_allclose(preset.null, preset.truth())

    def test_mean_sd_run_with_surface(self) -> None:
        preset = get_preset("mean_sd_beta")
        run = run_preset(preset, seed=1, horizon=60, grid_points=5)
        self.assertEqual(len(run.path_rows()), 60)
        self.assertEqual(sorted(run.surfaces), [50])
        rows = run.surfaces[50]
        self.assertEqual(len(rows), len(preset.lambda_grid(5)))
        self.assertTrue(all(row["member"] in (0, 1) for row in rows))
        summary = run.summary()
        self.assertIn("confidence_set_size_t50", summary)
        self.assertEqual(summary["seed"], 1)

    def test_ar1_band(self) -> None:
        run = run_preset(get_preset("ar1_coeff"), seed=2, horizon=100, grid_points=11)
        self.assertEqual(len(run.band), 100)
        self.assertEqual(run.surfaces, {})
        self.assertIsInstance(run.summary()["band_covers_truth"], bool)
        sizes = [row["members"] for row in run.band]
        self.assertEqual(sizes, sorted(sizes, reverse=True))

    def test_every_preset_runs_with_every_strategy(self) -> None:
        for name in PRESET_NAMES:
            for strategy in ("ftl", "ogd", "ftrl"):
                with self.subTest(preset=name, strategy=strategy):
                    run = run_preset(get_preset(name), seed=0, horizon=30, grid_points=2, strategy=strategy)
                    self.assertEqual(len(run.path_rows()), 30)

    def test_preset_strategy_options_are_defaults(self) -> None:
        preset = get_preset("ar1_coeff")
        fam = preset.family()
        self.assertEqual(fam.variance.rule, "covariate")
        self.assertEqual(preset.make_strategy(fam, "ogd").state.gradient_bound, 4.0)
        self.assertEqual(preset.make_strategy(fam, "ogd", gradient_bound=8.0).state.gradient_bound, 8.0)
        self.assertEqual(preset.describe()["strategy_options"], {"gradient_bound": 4.0})

    def test_var_cvar_rejects_within_its_horizon(self) -> None:
        preset = get_preset("var_cvar_beta")
        rejected = 0
        for seed in range(3):
            fam = preset.family()
            xs = generate(preset.generator.with_seed(seed), preset.horizon)
            rejected += run_test(fam, preset.make_strategy(fam), xs, preset.alpha).rejected
        self.assertGreaterEqual(rejected, 2)


class TestMonteCarlo(unittest.TestCase):
    """Seeded replications and their summaries."""

    def setUp(self) -> None:
        self.config = MonteCarloConfig("ar1_coeff", replications=4, horizon=60, horizons=(20, 40),
                                       regret_checkpoints=(30,), master_seed=11)

    def test_summary(self) -> None:
        with self.assertLogs("elicitest.simlab.montecarlo", "WARNING"):
            summary = monte_carlo(self.config)
        self.assertEqual(summary.replications, 4)
        rates = [summary.rejection_by_horizon[t] for t in (20, 40, 60)]
        self.assertEqual(rates, sorted(rates))
        self.assertIn(30, summary.regret_slopes)
        self.assertLessEqual(summary.ci_low, summary.rejection_rate)
        self.assertGreaterEqual(summary.ci_high, summary.rejection_rate)
        self.assertEqual(len(summary.table_rows()), 4)
        self.assertIn("Rejection rate", format_montecarlo_report_text(summary.to_dict()))

    def test_deterministic_and_worker_independent(self) -> None:
        first = monte_carlo(self.config).to_dict()
        self.assertEqual(first, monte_carlo(self.config).to_dict())
        pooled = replace(self.config, workers=2)
        self.assertEqual(first, monte_carlo(pooled).to_dict())

    def test_coverage(self) -> None:
        config = MonteCarloConfig("ar1_coeff:null", replications=2, horizon=40, coverage=True, grid_points=11)
        summary = monte_carlo(config)
        self.assertIsNotNone(summary.coverage)
        self.assertTrue(0.0 <= summary.coverage <= 1.0)

    def test_bad_configs(self) -> None:
        with self.assertRaises(ParamError):
            monte_carlo(MonteCarloConfig("ar1_coeff", replications=0))
        with self.assertRaises(PresetError):
            monte_carlo(MonteCarloConfig("unknown", replications=1))

    def test_binomial_interval_and_margin(self) -> None:
        low, high = binomial_interval(5, 10)
        self.assertLess(low, 0.5)
        self.assertGreater(high, 0.5)
        self.assertAlmostEqual(binomial_interval(0, 10)[0], 0.0)
        self.assertAlmostEqual(ville_margin(0.05, 2000), 0.00975, places=4)


class TestOperatingCharacteristics(unittest.TestCase):
    """Level under the null, power under the alternative and coverage of the running band."""

    def test_type_one_error_stays_at_alpha(self) -> None:
        summary = monte_carlo(MonteCarloConfig("ar1_coeff:null", replications=100, horizon=300, master_seed=5))
        self.assertLessEqual(summary.ci_low, summary.alpha)
        with self.assertLogs("elicitest.simlab.montecarlo", "WARNING"):
            small = monte_carlo(MonteCarloConfig("mean_sd_beta:null", replications=30, horizon=100, master_seed=5))
        self.assertLessEqual(small.rejection_rate, 0.2)

    def test_ar1_power_grows_with_the_horizon(self) -> None:
        config = MonteCarloConfig("ar1_coeff", replications=40, horizon=1000, horizons=(250, 500), master_seed=7)
        with self.assertLogs("elicitest.simlab.montecarlo", "WARNING"):
            summary = monte_carlo(config)
        rates = [summary.rejection_by_horizon[t] for t in (250, 500, 1000)]
        self.assertEqual(rates, sorted(rates))
        self.assertGreaterEqual(summary.rejection_rate, 0.75)

    def test_mean_sd_power(self) -> None:
        with self.assertLogs("elicitest.simlab.montecarlo", "WARNING"):
            summary = monte_carlo(MonteCarloConfig("mean_sd_beta", replications=20, horizon=200, master_seed=3))
        self.assertGreaterEqual(summary.rejection_rate, 0.9)

    def test_band_covers_the_truth(self) -> None:
        config = MonteCarloConfig("ar1_coeff:null", replications=30, horizon=200, coverage=True, grid_points=11)
        with self.assertLogs("elicitest.simlab.montecarlo", "WARNING"):
            summary = monte_carlo(config)
        self.assertGreaterEqual(summary.coverage, 0.8)


class TestOracles(unittest.TestCase):
    """Growth rate of the best fixed bet and the regret decomposition."""

    @classmethod
    def setUpClass(cls) -> None:
        cls.fam = bounded_identifiable(Mean((0.0, 1.0)), 0.5)
        cls.oracle = growth_rate_oracle(cls.fam, Generator.iid_beta(2.0, 5.0, seed=4), samples=20_000)

    def test_positive_growth_under_alternative(self) -> None:
        self.assertGreater(self.oracle.rate, 0.0)
        self.assertLess(self.oracle.theta[0], 0.0)
        self.assertEqual(self.oracle.samples, 20_000)

    def test_power_bound_gap(self) -> None:
        strat = FollowTheLeader(self.fam)
        for x in generate(Generator.iid_beta(2.0, 5.0, seed=6), 200):
            strat.step(x)
        self.assertGreaterEqual(power_bound_gap(strat, self.oracle.theta), -1e-6)
        self.assertEqual(power_bound_gap(FollowTheLeader(self.fam), self.oracle.theta), 0.0)


class TestArtifacts(unittest.TestCase):
    """CSV and JSON writers."""

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _read(self, path: Path):
        with open(path, encoding="utf-8", newline="") as f:
            return list(csv.reader(f))

    def test_run_dir(self) -> None:
        path = run_dir(self.tmp.name, "mean_sd_beta:null", 3)
        self.assertTrue(path.is_dir())
        self.assertEqual(path.parts[-2:], ("mean_sd_beta-null", "3"))

    def test_path_files(self) -> None:
        directory = Path(self.tmp.name)
        rows = [{"t": 1, "log_wealth": 0.5, "log_threshold": 3.0, "rejected": False}]
        content = self._read(write_path_csv(directory, rows))
        self.assertEqual(tuple(content[0]), PATH_HEADER)
        self.assertEqual(content[1], ["1", "0.5", "3.0", "0"])
        with PathWriter(directory) as writer:
            writer.write({"t": 1, "log_wealth": 0.25, "log_threshold": 3.0, "rejected": 1})
        self.assertEqual(self._read(directory / "path.csv")[1], ["1", "0.25", "3.0", "1"])

    def test_surface_and_confseq(self) -> None:
        directory = Path(self.tmp.name)
        surfaces = {50: [{"t": 50, "lambda": [0.1, 0.2], "log_wealth": 1.0, "member": 1}]}
        self.assertEqual(self._read(write_surface_csv(directory, surfaces))[0],
                         ["t", "lambda_1", "lambda_2", "log_wealth", "member"])
        updates = [
            {"t": 1, "members": 2, "lower": [0.1], "upper": [0.2], "mask": [1, 1]},
            {"t": 2, "members": 0, "lower": None, "upper": None, "mask": [0, 0]},
        ]
        content = self._read(write_confseq_csv(directory, updates))
        self.assertEqual(content[0], ["t", "members", "lower_1", "upper_1", "mask"])
        self.assertEqual(content[2], ["2", "0", "", "", "00"])

    def test_confseq_rows_are_streamed(self) -> None:
        directory = Path(self.tmp.name)
        with ConfseqWriter(directory, 2) as writer:
            writer.write({"t": 1, "members": 1, "lower": [0.1, 0.2], "upper": [0.1, 0.2], "mask": [1, 0]})
            writer.write({"t": 2, "members": 0, "lower": None, "upper": None, "mask": [0, 0]})
        content = self._read(directory / "confseq.csv")
        self.assertEqual(content[0], ["t", "members", "lower_1", "lower_2", "upper_1", "upper_2", "mask"])
        self.assertEqual(content[1], ["1", "1", "0.1", "0.2", "0.1", "0.2", "10"])
        self.assertEqual(content[2], ["2", "0", "", "", "", "", "00"])

    def test_export_errors(self) -> None:
        with self.assertRaises(ArtifactExportError):
            write_json(Path(self.tmp.name) / "missing" / "summary.json", {})
        with self.assertRaises(ArtifactExportError):
            write_json(Path(self.tmp.name) / "summary.json", {"bad": object()})
        blocker = os.path.join(self.tmp.name, "file")
        Path(blocker).write_text("x", encoding="utf-8")
        with self.assertRaises(ArtifactExportError):
            run_dir(blocker, "scenario")

    def test_json_handles_numpy(self) -> None:
        path = write_json(Path(self.tmp.name) / "summary.json", {"a": np.arange(2), "b": np.float64(0.5)})
        self.assertEqual(json.loads(path.read_text(encoding="utf-8")), {"a": [0, 1], "b": 0.5})


class TestReports(unittest.TestCase):
    def test_test_report(self) -> None:
        text = format_test_report_text({
            "functional": "mean",
            "strategy": "ftl",
            "null": [0.4],
            "family": {"kind": "bounded_identifiable"},
            "test": {"alpha": 0.05, "steps": 10, "final_log_wealth": 3.5, "running_max_log_wealth": 3.5,
                     "rejected_at": 9},
        })
        self.assertIn("reject at t=9", text)
        self.assertIn("bounded_identifiable", text)


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
