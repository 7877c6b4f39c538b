"""Command-line interface: sweeps, single spectra, comparisons, peak fits,
and the power <-> Rabi-frequency conversion.

Exit codes: 0 success, 1 usage/validation error, 2 numerical failure
(non-convergence or failed grid points).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, default_config, parse_config
from .core import angular_to_mhz, dbm_to_rabi, mhz_to_angular, rabi_to_dbm
from .gridio import emit_csv, read_csv
from .sweep import FitError, compare, find_peaks, fit_lorentzian, sweep


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qugrating", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_options(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--backend", choices=("lindblad", "floquet", "gvv", "analytic"))
        p.add_argument(
            "--scheme", choices=("unmodulated", "simultaneous", "complementary")
        )
        p.add_argument("--out", help="output CSV path")
        p.add_argument(
            "--plot",
            nargs="?",
            const="",
            default=None,
            help="also render a figure (optional path; default: CSV path with .png)",
        )

    p_sweep = sub.add_parser("sweep", help="2D sweep over detuning and control axis")
    add_run_options(p_sweep)

    p_spec = sub.add_parser("spectrum", help="single-control-value spectrum")
    add_run_options(p_spec)
    p_spec.add_argument(
        "--control",
        type=float,
        required=True,
        help="control value (units per control_kind: dBm or MHz)",
    )

    p_cmp = sub.add_parser("compare", help="residual report between two grid files")
    p_cmp.add_argument("--a", required=True)
    p_cmp.add_argument("--b", required=True)

    p_peaks = sub.add_parser("peaks", help="peak centers and Lorentzian fits of one row")
    p_peaks.add_argument("--in", dest="infile", required=True)
    p_peaks.add_argument("--row", type=int, default=0)
    p_peaks.add_argument("--prominence", type=float, default=0.05)
    p_peaks.add_argument("--window-mhz", type=float, default=10.0)
    p_peaks.add_argument("--no-fit", action="store_true", help="print centers only")

    p_conv = sub.add_parser("convert", help="power (dBm) <-> linear Rabi frequency (MHz)")
    p_conv.add_argument("--dbm", type=float)
    p_conv.add_argument("--mhz", type=float)
    return parser


def _load_config(args) -> RunConfig:
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
        config = parse_config(text)
    else:
        config = default_config()
    overrides = {}
    for key in ("backend", "scheme", "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        applied = tuple(k for k in config.applied_defaults if k not in overrides)
        config = replace(config, **overrides, applied_defaults=applied)
    return config.validate()


def _emit_and_report(grid, config: RunConfig, plot_arg) -> int:
    out = config.out or "sweep.csv"
    emit_csv(grid, out)
    print(f"wrote {grid.values.shape[0]}x{grid.values.shape[1]} grid to {out}")
    if plot_arg is not None:
        from .plotting import save_grid_figure  # matplotlib import only on demand

        plot_path = plot_arg or str(Path(out).with_suffix(".png"))
        save_grid_figure(grid, plot_path)
        print(f"wrote figure to {plot_path}")
    failed = int(grid.meta.get("failed_points", "0"))
    unconverged = int(grid.meta.get("unconverged_points", "0"))
    if failed or unconverged:
        print(
            f"numerical trouble: {failed} failed point(s), "
            f"{unconverged} unconverged point(s)",
            file=sys.stderr,
        )
        return 2
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    return _emit_and_report(sweep(config), config, args.plot)


def _cmd_spectrum(args) -> int:
    config = _load_config(args)
    config = replace(
        config,
        control_start=args.control,
        control_stop=args.control,
        control_count=1,
    ).validate()
    return _emit_and_report(sweep(config), config, args.plot)


def _cmd_compare(args) -> int:
    report = compare(read_csv(args.a), read_csv(args.b))
    print(report.summary())
    return 0


def _cmd_peaks(args) -> int:
    grid = read_csv(args.infile)
    if not 0 <= args.row < grid.control.size:
        raise ValueError(f"row {args.row} outside 0..{grid.control.size - 1}")
    row = grid.values[args.row]
    centers = find_peaks(grid.delta_mhz, row, args.prominence)
    if centers.size == 0:
        print("no peaks above prominence")
        return 0
    exit_code = 0
    for center in centers:
        line = f"center = {center:+.3f} MHz"
        if not args.no_fit:
            half = 0.5 * args.window_mhz
            try:
                fit = fit_lorentzian(grid.delta_mhz, row, (center - half, center + half))
                line += (
                    f", fit center = {fit.center:+.3f} MHz, fwhm = {fit.fwhm:.3f} MHz,"
                    f" amplitude = {fit.amplitude:.4g}, residual rms = {fit.residual_rms:.2e}"
                )
            except FitError as exc:
                line += f", fit failed: {exc}"
                exit_code = 2
            except ValueError as exc:
                line += f", fit skipped: {exc}"
        print(line)
    return exit_code


def _cmd_convert(args) -> int:
    if (args.dbm is None) == (args.mhz is None):
        raise _UsageError("convert needs exactly one of --dbm or --mhz")
    if args.dbm is not None:
        omega = dbm_to_rabi(args.dbm)
        print(f"{args.dbm:g} dBm -> {angular_to_mhz(omega):.6f} MHz (linear Rabi frequency)")
    else:
        if args.mhz <= 0:
            raise ValueError("--mhz must be > 0")
        print(f"{args.mhz:g} MHz -> {rabi_to_dbm(mhz_to_angular(args.mhz)):.6f} dBm")
    return 0


_HANDLERS = {
    "sweep": _cmd_sweep,
    "spectrum": _cmd_spectrum,
    "compare": _cmd_compare,
    "peaks": _cmd_peaks,
    "convert": _cmd_convert,
}


def cli_main(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    try:
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FitError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
