"""Command-line interface.

Subcommands map onto the experiment runners plus three calculators
(``squeeze``, ``photon-budget``, ``regime-check``).  Options layer on top of
an optional config file; results are written as CSV or JSON tables (grids as
CSV) into ``--output`` or the ``PULSOX_OUTPUT_DIR`` directory.

Exit codes: 0 success, 1 validation/config error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, EXPERIMENTS, ExperimentConfig, load_config
from .experiments import RunResult, estimate_fiber_epsilon, run_experiment
from .squeezer import (approx_photon_budget, photon_budget, regime_check,
                       schedule_for_mu)
from .states import pure_fidelity
from .wigner import grid_to_csv


def _common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (key = value lines)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--output", help="output path stem")
    parser.add_argument("--format", choices=("csv", "json"), help="table format")


def _experiment_parser(sub, name: str, extra=()) -> None:
    parser = sub.add_parser(name, help=f"run the {name} experiment")
    _common_options(parser)
    for args, kwargs in extra:
        parser.add_argument(*args, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pulsox",
                                     description="pulsed optomechanical squeezing simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    squeeze = sub.add_parser("squeeze", help="print the analytic pulse schedule")
    squeeze.add_argument("--mu", type=float, required=True)
    squeeze.add_argument("--phi", type=float, required=True)
    squeeze.add_argument("--ancilla-vsq", type=float, default=0.5)

    regime = sub.add_parser("regime-check", help="pulsed-QND validity diagnostics")
    regime.add_argument("--g0", type=float, required=True)
    regime.add_argument("--omega-m", type=float, required=True)
    regime.add_argument("--kappa", type=float, required=True)
    regime.add_argument("--pulse-bandwidth", type=float, required=True)
    regime.add_argument("--margin", type=float, default=10.0)

    fiber = sub.add_parser("fiber-loss", help="delay-line loss estimate")
    fiber.add_argument("--length-km", type=float, required=True)
    fiber.add_argument("--db-per-km", type=float, default=0.4)

    sweep_opts = (
        (("--mu-log-range",), {"metavar": "A:B:N", "help": "log10(mu) grid"}),
        (("--mu",), {"help": "comma-separated mu values"}),
        (("--phi",), {"type": float, "help": "mechanical rotation angle"}),
        (("--q",), {"help": "comma-separated quality factors"}),
        (("--epsilon",), {"help": "comma-separated loss fractions"}),
        (("--resolution",), {"type": int, "help": "Wigner grid points per axis"}),
    )
    for name in EXPERIMENTS:
        _experiment_parser(sub, name, sweep_opts)
    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    config.experiment = args.command
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(key, "expected KEY=VALUE")
        config.set_key(key.strip(), value.strip())
    if getattr(args, "mu_log_range", None):
        config.sweep.mu_log_range = args.mu_log_range
    if getattr(args, "mu", None):
        config.set_key("sweep.mu", args.mu)
    if getattr(args, "phi", None) is not None:
        config.physical.phi = args.phi
    if getattr(args, "q", None):
        config.set_key("sweep.q", args.q)
    if getattr(args, "epsilon", None):
        config.set_key("sweep.epsilon", args.epsilon)
    if getattr(args, "resolution", None):
        config.grid.resolution = args.resolution
    if args.output:
        config.output.path = args.output
    if args.format:
        config.output.format = args.format
    config.validate()
    return config


def _output_stem(config: ExperimentConfig) -> Path:
    if config.output.path:
        return Path(config.output.path)
    base = Path(os.environ.get("PULSOX_OUTPUT_DIR", "."))
    return base / config.experiment.replace("-", "_")


def _write_outputs(config: ExperimentConfig, result: RunResult) -> list[Path]:
    stem = _output_stem(config)
    stem.parent.mkdir(parents=True, exist_ok=True)
    fmt = config.output.format
    written = []
    multi = len(result.tables) > 1
    for name, table in result.tables.items():
        path = stem.with_name(f"{stem.name}_{name}.{fmt}") if multi \
            else stem.with_suffix(f".{fmt}")
        path.write_text(table.render(fmt), encoding="utf-8")
        written.append(path)
    for name, grid in result.grids.items():
        path = stem.with_name(f"{stem.name}_grid_{name}.csv")
        grid_to_csv(grid, path)
        written.append(path)
    return written


def _run_calculator(args: argparse.Namespace) -> int:
    if args.command == "squeeze":
        schedule = schedule_for_mu(args.mu, args.phi, args.ancilla_vsq)
        print(f"schedule for mu={args.mu:g}, phi={args.phi:g}:")
        print(f"  chi1 = {schedule.chi1:.6g}")
        print(f"  lambda = {schedule.lam:.6g}")
        print(f"  second xx pulse = {schedule.chi2_second_pulse:.6g}")
        print(f"  chi3 = {schedule.chi3:.6g}")
        print(f"  theta = {schedule.theta:.6g} rad")
        print(f"  ancilla: vsq = {schedule.ancilla_vsq:g} at {schedule.ancilla_angle:.6g} rad")
        print(f"  photon budget = {photon_budget(schedule):.4g} "
              f"(approx {approx_photon_budget(args.mu, args.phi):.4g})")
        print(f"  lossless vacuum infidelity = "
              f"{1.0 - pure_fidelity(args.mu, args.phi, 1.0, args.ancilla_vsq):.4g}")
        return 0
    if args.command == "regime-check":
        report = regime_check(args.g0, args.omega_m, args.kappa,
                              args.pulse_bandwidth, args.margin)
        for check in report.checks:
            status = "ok" if check.ok else "FAIL"
            print(f"  [{status}] {check.name}: ratio {check.ratio:.3g} "
                  f"(margin {check.margin:g})")
        print("regime check:", "all conditions met" if report.ok
              else "warnings: " + ", ".join(report.failed()))
        return 0
    if args.command == "fiber-loss":
        eps = estimate_fiber_epsilon(args.length_km, args.db_per_km)
        print(f"fiber loss: epsilon = {eps:.4g} "
              f"({args.length_km:g} km at {args.db_per_km:g} dB/km)")
        return 0
    raise AssertionError(f"unhandled command {args.command}")


def _merge_range_values(argv: list[str]) -> list[str]:
    # argparse mistakes '-1.2:1.2:49' for a flag; join it onto its option
    merged = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok == "--mu-log-range" and i + 1 < len(argv):
            merged.append(f"{tok}={argv[i + 1]}")
            skip = True
        else:
            merged.append(tok)
    return merged


def cli_main(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_range_values(list(argv)))
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command in ("squeeze", "regime-check", "fiber-loss"):
            return _run_calculator(args)
        config = _resolve_config(args)
        if args.command == "photon-budget" and len(config.sweep.mu) == 1 \
                and not (config.output.path or config.sweep.mu_log_range):
            mu = config.sweep.mu[0]
            schedule = schedule_for_mu(mu, config.physical.phi)
            print(f"photon budget: approx {approx_photon_budget(mu, config.physical.phi):.3g}, "
                  f"exact pulse sum {photon_budget(schedule):.4g} "
                  f"(mu={mu:g}, phi={config.physical.phi:g})")
            return 0
        result = run_experiment(config)
        written = _write_outputs(config, result)
        print(result.summary)
        for path in written:
            print(f"  wrote {path}")
        return 0
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, OSError) as exc:
        print(f"numerical/io failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
