"""
cli.py

Command-line entry point: ``elicitest test | confseq | experiment | montecarlo``.
Exit code 0 on success, 2 on any configuration, data or engine error.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from dataclasses import fields
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, TextIO, Tuple

import numpy as np

from .betting.exceptions import StrategyConfigurationError
from .betting.strategies import STRATEGY_NAMES, Strategy, get_strategy
from .config import ConfigError, DataFormatError, RunConfig, load_config_file
from .core.exceptions import ElicitestError
from .core.families import FamilySpec
from .inference.confidence import DEFAULT_POINTS, build_confidence_grid, covers, iter_confidence_sequence, lambda_grid
from .inference.sequential import log_threshold, run_test
from .simlab.artifacts import (
    ConfseqWriter,
    PathWriter,
    run_dir,
    write_confseq_csv,
    write_csv,
    write_path_csv,
    write_summary_json,
    write_surface_csv,
)
from .simlab.generators import generate
from .simlab.montecarlo import MonteCarloConfig, monte_carlo
from .simlab.presets import PRESET_NAMES, ExperimentPreset, get_preset, run_preset
from .simlab.report import format_confseq_report_text, format_montecarlo_report_text, format_test_report_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 2
LOG_FORMAT = "%(asctime)s - %(name)s - %(message)s"


class CsvObservations:
    """Observation rows from a CSV handle; a non-numeric first line is a header."""

    def __init__(self, handle: TextIO, dim: int) -> None:
        self.handle = handle
        self.dim = dim
        self.line = 0

    def __iter__(self) -> Iterator[np.ndarray]:
        for self.line, raw in enumerate(self.handle, start=1):
            text = raw.strip()
            if not text:
                continue
            cells = [c.strip() for c in text.split(",")]
            try:
                values = np.array([float(c) for c in cells], dtype=float)
            except ValueError:
                if self.line == 1:
                    continue
                raise DataFormatError(self.line, f"non-numeric value in '{text}'") from None
            if values.size != self.dim:
                raise DataFormatError(self.line, f"expected {self.dim} column(s), got {values.size}")
            if not np.all(np.isfinite(values)):
                raise DataFormatError(self.line, "observations must be finite")
            yield values


def configure_logging(verbose: bool = False, debug: bool = False) -> None:
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)


# -- shared setup ------------------------------------------------------------
def _preset(cfg: RunConfig) -> Optional[ExperimentPreset]:
    return get_preset(cfg.preset) if cfg.preset else None


def _family_factory(cfg: RunConfig, preset: Optional[ExperimentPreset]):
    return preset.family if preset is not None else cfg.build_family


def _strategy_name(cfg: RunConfig, preset: Optional[ExperimentPreset]) -> str:
    return cfg.strategy or (preset.strategy if preset is not None else "ftl")


def _strategy_options(cfg: RunConfig, preset: Optional[ExperimentPreset]) -> dict:
    """Preset-declared hyperparameters, overridden by the configuration."""
    declared = dict(preset.strategy_options) if preset is not None else {}
    return {**declared, **cfg.strategy_options()}


def _open_data(cfg: RunConfig):
    if cfg.data == "-":
        return sys.stdin
    try:
        return open(cfg.data, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read data file {cfg.data}") from exc


def _run_name(cfg: RunConfig, preset: Optional[ExperimentPreset]) -> str:
    if preset is not None:
        return preset.name
    if cfg.data and cfg.data != "-":
        return Path(cfg.data).stem
    return cfg.functional or "stdin"


def _stream(cfg: RunConfig, preset: Optional[ExperimentPreset], dim: int) -> Tuple[Iterable, Optional[CsvObservations]]:
    """Observations from --data, or from the preset generator at --seed."""
    if cfg.data:
        reader = CsvObservations(_open_data(cfg), dim)
        stream: Iterable = reader
        if cfg.horizon:
            stream = itertools.islice(reader, cfg.horizon)
        return stream, reader
    if preset is None:
        raise ConfigError("A custom run reads its observations from --data (a CSV path or '-' for stdin).")
    return generate(preset.generator.with_seed(cfg.seed), cfg.horizon or preset.horizon), None


def _make_strategy(name: str, fam: FamilySpec, streaming: bool, **hyper) -> Strategy:
    if streaming:
        try:
            return get_strategy(name, fam, keep_history=False, **hyper)
        except StrategyConfigurationError as exc:
            logger.info("Keeping the observation history: %s", exc)
    return get_strategy(name, fam, **hyper)


def _at_line(reader: Optional[CsvObservations], exc: ElicitestError) -> ElicitestError:
    if reader is None or isinstance(exc, DataFormatError):
        return exc
    return DataFormatError(reader.line, str(exc))


def _save_config(directory: Path, cfg: RunConfig) -> None:
    try:
        (directory / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot write {directory / 'config.txt'}") from exc


# -- subcommands -------------------------------------------------------------
def cmd_test(cfg: RunConfig) -> dict:
    preset = _preset(cfg)
    if preset is None and cfg.null is None:
        raise ConfigError("A custom test needs --null.")
    fam = _family_factory(cfg, preset)(cfg.null_value)
    name = _strategy_name(cfg, preset)
    strategy = _make_strategy(name, fam, bool(cfg.data), **_strategy_options(cfg, preset))
    stream, reader = _stream(cfg, preset, fam.functional.obs_dim)
    directory = run_dir(cfg.out, _run_name(cfg, preset), cfg.seed)
    bound = log_threshold(cfg.alpha)

    with PathWriter(directory) as writer:
        def on_step(row: dict) -> None:
            writer.write({"t": row["t"], "log_wealth": row["log_wealth"], "log_threshold": bound,
                          "rejected": row["rejected"]})

        try:
            outcome = run_test(fam, strategy, stream, cfg.alpha, continue_after_rejection=cfg.continue_after_rejection,
                               on_step=on_step, record_path=False)
        except ElicitestError as exc:
            raise _at_line(reader, exc) from exc
        finally:
            if reader is not None and reader.handle is not sys.stdin:
                reader.handle.close()

    summary = {
        "config": cfg.resolved(),
        "functional": fam.functional.id,
        "null": list(fam.null),
        "family": fam.describe(),
        "strategy": name,
        "certified": strategy.certificate.certified,
        "degenerate_rows": strategy.state.degenerate_rows,
        "test": outcome.summary(),
    }
    write_summary_json(directory, summary)
    _save_config(directory, cfg)
    print(format_test_report_text(summary))
    return summary


def cmd_confseq(cfg: RunConfig) -> dict:
    preset = _preset(cfg)
    factory = _family_factory(cfg, preset)
    functional = preset.functional() if preset is not None else cfg.build_functional()
    lower, upper, points = cfg.grid_spec(functional.param_dim)
    if preset is not None:
        lower = lower or preset.grid_lower or None
        upper = upper or preset.grid_upper or None
        points = points or preset.grid_points
    lambdas = lambda_grid(functional, points or DEFAULT_POINTS, lower, upper)
    name = _strategy_name(cfg, preset)
    grid = build_confidence_grid(lambdas, factory, name, cfg.alpha, **_strategy_options(cfg, preset))
    stream, reader = _stream(cfg, preset, functional.obs_dim)
    directory = run_dir(cfg.out, _run_name(cfg, preset), cfg.seed)
    with ConfseqWriter(directory, functional.param_dim) as writer:
        try:
            for update in iter_confidence_sequence(grid, stream):
                writer.write(update.to_row())
        except ElicitestError as exc:
            raise _at_line(reader, exc) from exc
        finally:
            if reader is not None and reader.handle is not sys.stdin:
                reader.handle.close()

    hull = grid.hull()
    summary = {
        "config": cfg.resolved(),
        "functional": functional.id,
        "strategy": name,
        "candidates": len(grid.strategies),
        "steps": grid.t,
        "members": int(grid.mask.sum()),
        "hull": {"lower": hull[0].tolist(), "upper": hull[1].tolist()} if hull else None,
    }
    if preset is not None:
        summary["covers_truth"] = covers(grid, preset.truth())
    write_summary_json(directory, summary)
    _save_config(directory, cfg)
    print(format_confseq_report_text(summary))
    return summary


def _require_preset(cfg: RunConfig, command: str) -> ExperimentPreset:
    if not cfg.preset:
        raise ConfigError(f"'{command}' needs --preset, one of: {', '.join(PRESET_NAMES)}.")
    return get_preset(cfg.preset)


def cmd_experiment(cfg: RunConfig) -> dict:
    preset = _require_preset(cfg, "experiment")
    _, _, points = cfg.grid_spec(preset.functional().param_dim)
    run = run_preset(preset, cfg.seed, horizon=cfg.horizon, grid_points=points, alpha=cfg.alpha, strategy=cfg.strategy)
    directory = run_dir(cfg.out, preset.name, cfg.seed)
    write_path_csv(directory, run.path_rows())
    if run.surfaces:
        write_surface_csv(directory, run.surfaces)
    if run.band:
        write_confseq_csv(directory, run.band)
    summary = run.summary()
    summary["config"] = cfg.resolved()
    write_summary_json(directory, summary)
    _save_config(directory, cfg)
    report = {
        "functional": preset.functional_id,
        "strategy": run.preset.strategy,
        "null": list(preset.null),
        "family": {"kind": preset.family_kind.value},
        "test": run.outcome.summary(),
    }
    print(format_test_report_text(report))
    return summary


def cmd_montecarlo(cfg: RunConfig) -> dict:
    preset = _require_preset(cfg, "montecarlo")
    _, _, points = cfg.grid_spec(preset.functional().param_dim)
    config = MonteCarloConfig(
        scenario=preset.name,
        replications=cfg.replications,
        horizon=cfg.horizon,
        alpha=cfg.alpha,
        master_seed=cfg.seed,
        strategy=cfg.strategy,
        horizons=cfg.int_list("horizons"),
        regret_checkpoints=cfg.int_list("checkpoints"),
        coverage=cfg.coverage,
        grid_points=points,
        workers=cfg.workers,
    )
    result = monte_carlo(config)
    directory = run_dir(cfg.out, preset.name, cfg.seed)
    summary = result.to_dict()
    rows = result.table_rows()
    header = ("scenario", "horizon", "rejection_rate", "regret_over_t", "regret_max")
    write_csv(directory / "montecarlo.csv", header, ([row[k] for k in header] for row in rows))
    write_summary_json(directory, {"config": cfg.resolved(), "montecarlo": summary})
    _save_config(directory, cfg)
    print(format_montecarlo_report_text(summary))
    return summary


COMMANDS = {
    "test": cmd_test,
    "confseq": cmd_confseq,
    "experiment": cmd_experiment,
    "montecarlo": cmd_montecarlo,
}


# -- argument parsing --------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat key = value file; command-line flags win over it.")
    common.add_argument("--preset", help=f"Experiment preset, optionally with ':null' ({', '.join(PRESET_NAMES)}).")
    common.add_argument("--functional", help="Functional id: mean, quantile:<alpha>, regression:<k>, mean_sd, var_cvar:<alpha>.")
    common.add_argument("--data-range", dest="data_range", help="Declared data range 'lo,hi'.")
    common.add_argument("--null", help="Null value, comma-separated.")
    common.add_argument("--family", help="bounded_elicitable, bounded_identifiable, sub_psi_elicitable or sub_psi_identifiable.")
    common.add_argument("--psi", help="ψ for sub-ψ families, e.g. gaussian:1 or hoeffding:0:1.")
    common.add_argument("--mode", help="Sub-ψ mode: joint, fixed_u or scaled.")
    common.add_argument("--variance", help="Sub-ψ variance process: unit (v_t = 1) or covariate (v_t = ‖x_t‖², regression only).")
    common.add_argument("--fixed-u", dest="fixed_u", type=float, help="u for the fixed_u sub-ψ mode (default 0.5).")
    common.add_argument("--domain", help="Bet domain, e.g. ball:1, ball:1@0,0 or box:-1,1;-1,1.")
    common.add_argument("--scale", help="Score scale c for bounded elicitable families, or 'auto'.")
    common.add_argument("--strategy", help=f"Betting strategy: {', '.join(STRATEGY_NAMES)}.")
    common.add_argument("--gradient-bound", dest="gradient_bound", type=float, help="Gradient bound G for FTRL and OGD.")
    common.add_argument("--alpha", type=float, help="Test level in (0, 1).")
    common.add_argument("--seed", type=int, help="Seed for generated data (master seed for montecarlo).")
    common.add_argument("--horizon", type=int, help="Maximum number of observations.")
    common.add_argument("--grid", help="Candidate grid: 'points' or 'lo,hi,points' per axis joined by ';'.")
    common.add_argument("--data", help="CSV of observations, '-' for stdin.")
    common.add_argument("--out", help="Output root (default runs).")
    common.add_argument("--continue", dest="continue_after_rejection", action="store_const", const=True,
                        help="Keep running after the first rejection.")
    common.add_argument("--verbose", action="store_true", help="Log progress at INFO level.")
    common.add_argument("--debug", action="store_true", help="Log at DEBUG level.")

    parser = argparse.ArgumentParser(prog="elicitest", description="Anytime-valid sequential tests for statistical functionals.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("test", parents=[common], help="Test one null value on a stream.")
    sub.add_parser("confseq", parents=[common], help="Grid-inverted confidence sequence.")
    sub.add_parser("experiment", parents=[common], help="Run a preset: test path, surfaces and band.")
    mc = sub.add_parser("montecarlo", parents=[common], help="Type-I error, power, regret and coverage over replications.")
    mc.add_argument("--replications", type=int, help="Number of replications (default 200).")
    mc.add_argument("--workers", type=int, help="Worker processes (default 1).")
    mc.add_argument("--horizons", help="Comma-separated horizons for the rejection-rate table.")
    mc.add_argument("--checkpoints", help="Comma-separated times at which regret is recorded.")
    mc.add_argument("--coverage", action="store_const", const=True, help="Also check confidence-sequence coverage.")
    return parser


def _cli_values(args: argparse.Namespace) -> dict:
    known = {f.name for f in fields(RunConfig)}
    return {k: v for k, v in vars(args).items() if k in known and v is not None}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.debug)
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = RunConfig.from_sources(file_values, _cli_values(args))
        logger.info("Running %s with %s.", args.command, cfg.resolved())
        COMMANDS[args.command](cfg)
    except ElicitestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
