"""
Command-line entry point for the rf-SQUID Escape Simulator
Subcommands: levels, crossing, sweep, validate, plot.
"""

import argparse
import logging
import os
import sys
from dataclasses import asdict
from typing import List, Optional

from src import global_vars
from src.config_parser import SweepConfig, load_config
from src.emitters import emit_csv, emit_svg, read_csv
from src.errors import ConfigError, SimulatorError
from src.peak_detector import MIN_ROWS, detect_peaks
from src.sweep_runner import GHZ, SweepRunner
from src.validator import validate_command

logger = logging.getLogger("app")

KEYS_HELP = """config keys (one 'section.key = value' per line, '#' starts a comment):
  device.beta_L        screening parameter, 1 < beta_L < 4.6 for a double well
  device.L  [H]        loop inductance           device.C  [F]  junction capacitance
  device.R_eff [ohm]   shunt resistance (8e6)    device.T  [K]  temperature (0.05)
  sweep.phi_x_min, sweep.phi_x_max   bias range in units of 2*pi*Phi/Phi0, or auto
  sweep.n_points (2001)  sweep.seed_phi_x (auto)  sweep.left_level (1)  sweep.workers
  drive.nu [Hz]        comma-separated drive frequencies
  drive.I_amp [A]      drive current amplitude, or auto
  output.csv, output.svg
  validate.oracle_grid, validate.level_tol, validate.gap_tol, validate.element_tol,
  validate.element_points, validate.harmonic_tol, validate.gap_lambdas
"""


def setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, global_vars.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Microwave-induced escape in a dissipative rf-SQUID",
                                     epilog=KEYS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", required=True, help="sweep configuration file")
        sub.add_argument("--nu", type=float, action="append", help="drive frequency in Hz (repeatable)")
        sub.add_argument("--out", help="output CSV path")
        sub.add_argument("--points", type=int, help="number of phi_x grid points")
        sub.add_argument("--reff", type=float, help="shunt resistance override in ohm")
        sub.add_argument("--seed-phix", type=float, dest="seed_phix", help="crossing seed phi_x")
        sub.add_argument("--no-progress", action="store_true", help="hide progress bars")

    for name, text in (("levels", "pair energies relative to E_0 versus phi_x"),
                       ("crossing", "print the anticrossing point"),
                       ("sweep", "escape rate W versus phi_x"),
                       ("validate", "compare against the grid oracle")):
        add_common(commands.add_parser(name, help=text))

    plot = commands.add_parser("plot", help="SVG plot from a CSV")
    plot.add_argument("csv", help="CSV written by sweep or levels")
    plot.add_argument("--out", help="SVG path (default: CSV path with .svg)")
    plot.add_argument("--y", default=None, help="column to plot (default W, or f1_GHz for level files)")
    return parser


def resolve_config(args: argparse.Namespace) -> SweepConfig:
    config = load_config(args.config)
    return config.with_overrides(nu=args.nu, points=args.points, r_eff=args.reff,
                                 seed_phi_x=args.seed_phix, out=args.out)


def output_path(base: str, nu: Optional[float], several: bool) -> str:
    if not several or nu is None:
        return base
    root, ext = os.path.splitext(base)
    return f"{root}_nu{nu / GHZ:.3f}{ext or '.csv'}"


def run_crossing(config: SweepConfig) -> int:
    crossing = SweepRunner(config, progress=False).crossing
    for name, value in asdict(crossing).items():
        print(f"{name:<12} {value}")
    print(f"{'width':<12} {crossing.width}")
    return 0


def run_levels(config: SweepConfig, progress: bool) -> int:
    runner = SweepRunner(config, progress)
    rows = runner.run_levels()
    root, ext = os.path.splitext(config.output.csv)
    path = f"{root}_levels{ext or '.csv'}" if config.output.csv == "sweep.csv" else config.output.csv
    emit_csv(rows, path)
    print(f"✅ {len(rows)} level rows written to {path}")
    return 0


def run_sweep_command(config: SweepConfig, progress: bool) -> int:
    runner = SweepRunner(config, progress)
    nus: List[float] = config.drive.nu
    phi_grid = runner.grid(nus)
    current = runner.drive_amplitude()
    several = len(nus) > 1
    for nu in nus:
        rows = runner.run(nu, phi_grid, current)
        path = output_path(config.output.csv, nu, several)
        emit_csv(rows, path)
        if config.output.svg:
            emit_svg(rows, output_path(config.output.svg, nu, several))
        print(f"✅ nu={nu / GHZ:.6f} GHz: {len(rows)} rows written to {path}")
        if len(rows) >= MIN_ROWS:
            report = detect_peaks(rows)
            print(f"   {report.classification}: "
                  + ", ".join(f"{p.kind}@{p.phi_x:.6f}" for p in report.peaks))
    return 0


def run_plot(args: argparse.Namespace) -> int:
    rows = read_csv(args.csv)
    y = args.y or ("W" if hasattr(rows[0], "W") else "f1_GHz")
    path = args.out or os.path.splitext(args.csv)[0] + ".svg"
    emit_svg(rows, path, y=y)
    print(f"✅ plot written to {path}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        if args.command == "plot":
            return run_plot(args)
        config = resolve_config(args)
        progress = not args.no_progress
        if args.command == "crossing":
            return run_crossing(config)
        if args.command == "levels":
            return run_levels(config, progress)
        if args.command == "sweep":
            return run_sweep_command(config, progress)
        report = validate_command(config)
        print(report.table())
        return report.exit_status
    except ConfigError as e:
        print(f"❌ config error in {getattr(args, 'config', '?')}: {e}", file=sys.stderr)
        return 2
    except (SimulatorError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"❌ {args.command} failed: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
