"""Command-line experiment runner.

Three subcommands produce CSV (to a file via --out, else standard
output): `sweep` for sum-rate and energy-efficiency grids, `accuracy`
for the mean-SINR approximation study, and `converge` for metric
trajectories. Settings come from an optional flat key=value config
file plus command-line overrides; --plot additionally renders PNG
figures next to the CSV file.

Exit codes: 0 on success, 2 for an invalid specification, 1 for a
numerical failure during a run.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import InvalidSpec, NonFinite, NotPositiveDefinite
from .experiment import (
    EVAL_CHANNELS,
    ExperimentSpec,
    cmd_accuracy,
    cmd_converge,
    cmd_sweep,
    write_accuracy_csv,
    write_converge_csv,
    write_sweep_csv,
)

# config-file keys (same vocabulary as the long options)
_KEYS = ("scenario", "snr", "sigma2", "trials", "seed", "algo", "iters", "rel_tol", "mc_draws", "eval_channel", "out")


def _parse_float_list(text: str, what: str):
    try:
        return tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise InvalidSpec(f"{what} must be a comma-separated list of numbers, got {text!r}") from exc


def _parse_int(text, what: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"{what} must be an integer, got {text!r}") from exc


def _parse_config_file(path: str) -> dict:
    """Flat key = value file; # starts a comment, blank lines ignored."""
    settings = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InvalidSpec(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpec(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise InvalidSpec(f"{path}:{lineno}: unknown key {key!r}, expected one of {_KEYS}")
        settings[key] = value
    return settings


def _add_common_options(sub: argparse.ArgumentParser, trials_default_note: str) -> None:
    sub.add_argument("config", nargs="?", help="flat key = value config file (flags override it)")
    sub.add_argument("--scenario", help='network layout like "(3x3,1)^4" for (MxN,D)^K')
    sub.add_argument("--snr", help="comma-separated SNR grid in dB, e.g. -5,0,5")
    sub.add_argument("--sigma2", help="comma-separated CSI error variances, e.g. 0.05,0.1")
    sub.add_argument("--trials", help=f"channel realizations per grid point ({trials_default_note})")
    sub.add_argument("--seed", help="base seed; trial t derives seed+t")
    sub.add_argument("--algo", help="comma-separated algorithms: proposed,max_sinr,min_leakage")
    sub.add_argument("--iters", help="maximum alternations per run")
    sub.add_argument("--rel-tol", dest="rel_tol", help="relative metric-change stopping tolerance")
    sub.add_argument("--mc-draws", dest="mc_draws", help="Monte Carlo error draws per stream (accuracy)")
    sub.add_argument("--eval-channel", dest="eval_channel", choices=EVAL_CHANNELS,
                     help="evaluate rates on the true or the estimated channel")
    sub.add_argument("--out", help="CSV output path (default: standard output)")
    sub.add_argument("--plot", action="store_true",
                     help="also render PNG figures next to the CSV (needs --out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icbeam",
        description="Interference-network transceiver design experiments under imperfect CSI.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    sweep = subs.add_parser("sweep", help="sum rate and energy efficiency over an SNR grid")
    _add_common_options(sweep, "default 200")
    accuracy = subs.add_parser("accuracy", help="mean-SINR approximation accuracy per grid point")
    _add_common_options(accuracy, "default 20")
    converge = subs.add_parser("converge", help="metric trajectory dump at one grid point")
    _add_common_options(converge, "default 10")
    return parser


_COMMAND_DEFAULTS = {
    "sweep": {},
    "accuracy": {"trials": 20, "algorithms": ("proposed",)},
    "converge": {"trials": 10, "snr_db_list": (20.0,), "algorithms": ("proposed",)},
}


def _spec_from(args: argparse.Namespace):
    """Merge config file and flags into (ExperimentSpec, out path or None)."""
    settings = _parse_config_file(args.config) if args.config else {}
    # flags override file values
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    fields = dict(_COMMAND_DEFAULTS[args.command])
    if "scenario" in settings:
        fields["scenario"] = settings["scenario"]
    if "snr" in settings:
        fields["snr_db_list"] = _parse_float_list(settings["snr"], "snr")
    if "sigma2" in settings:
        fields["sigma2_list"] = _parse_float_list(settings["sigma2"], "sigma2")
    if "trials" in settings:
        fields["trials"] = _parse_int(settings["trials"], "trials")
    if "seed" in settings:
        fields["seed"] = _parse_int(settings["seed"], "seed")
    if "algo" in settings:
        fields["algorithms"] = tuple(a.strip() for a in settings["algo"].split(",") if a.strip())
    if "iters" in settings:
        fields["alternations"] = _parse_int(settings["iters"], "iters")
    if "rel_tol" in settings:
        try:
            fields["rel_tol"] = float(settings["rel_tol"])
        except ValueError as exc:
            raise InvalidSpec(f"rel_tol must be a number, got {settings['rel_tol']!r}") from exc
    if "mc_draws" in settings:
        fields["mc_draws"] = _parse_int(settings["mc_draws"], "mc_draws")
    if "eval_channel" in settings:
        fields["eval_channel"] = settings["eval_channel"]
    return ExperimentSpec(**fields), settings.get("out")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec, out_path = _spec_from(args)
        if args.plot and not out_path:
            raise InvalidSpec("--plot renders files next to the CSV, so it needs --out")
        rows, write_csv = {
            "sweep": (cmd_sweep, write_sweep_csv),
            "accuracy": (cmd_accuracy, write_accuracy_csv),
            "converge": (cmd_converge, write_converge_csv),
        }[args.command]
        produced = list(rows(spec))
        if out_path:
            with open(out_path, "w", newline="") as fp:
                write_csv(produced, fp)
            if args.plot:
                from . import figures

                render = {
                    "sweep": figures.render_sweep_figures,
                    "accuracy": figures.render_accuracy_figure,
                    "converge": figures.render_converge_figure,
                }[args.command]
                for path in render(produced, out_path):
                    print(path)
        else:
            write_csv(produced, sys.stdout)
    except InvalidSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NotPositiveDefinite, NonFinite, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
