"""Command-line interface.

    sdlab <experiment> [--gamma F] [--dt F] [--t-max F] [--paths N]
          [--seed N] [--out DIR] [--format csv|json] [--config FILE]
          [--plot] [--quiet]

Exit codes: 0 all criteria pass, 1 a criterion failed, 2 invalid
configuration.  The seed falls back to the SDLAB_SEED environment
variable, then to 0.  A JSON config file supplies the same flat keys
{experiment, gamma, dt, t_max, n_paths, seed, out_dir, format};
command-line flags override it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import DEFAULTS, ConfigError, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdlab",
        description="Simulation diagnostics for the singular distorted "
                    "Brownian motion on R^3.")
    parser.add_argument("experiment", nargs="?", choices=sorted(DEFAULTS),
                        help="experiment to run")
    parser.add_argument("--config", help="JSON config file (flat keys)")
    parser.add_argument("--gamma", type=float, help="drift parameter")
    parser.add_argument("--dt", type=float, help="time step")
    parser.add_argument("--t-max", type=float, dest="t_max",
                        help="simulation horizon")
    parser.add_argument("--paths", type=int, dest="n_paths",
                        help="number of Monte Carlo paths/samples")
    parser.add_argument("--seed", type=int, help="master seed "
                        "(default: SDLAB_SEED env var, then 0)")
    parser.add_argument("--out", dest="out_dir",
                        help="directory for report JSON and path files")
    parser.add_argument("--format", choices=("csv", "json"),
                        help="path artifact format (default csv)")
    parser.add_argument("--plot", action="store_true",
                        help="render figures next to the output (needs --out)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress the per-criterion summary")
    return parser


def _gather_config(args: argparse.Namespace) -> dict:
    config: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
    for key in ("experiment", "gamma", "dt", "t_max", "n_paths", "seed",
                "out_dir", "format"):
        val = getattr(args, key, None)
        if val is not None:
            config[key] = val
    if "experiment" not in config:
        raise ConfigError("no experiment given (argument or config file)")
    if config.get("seed") is None:
        env = os.environ.get("SDLAB_SEED")
        if env is not None:
            try:
                config["seed"] = int(env)
            except ValueError:
                raise ConfigError(f"SDLAB_SEED is not an integer: {env!r}")
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _gather_config(args)
        if config.get("out_dir"):
            os.makedirs(config["out_dir"], exist_ok=True)
        elif args.plot:
            raise ConfigError("--plot requires --out")
        report = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.plot:
        from . import plots
        plots.render_report(report, config["out_dir"])
    if not args.quiet:
        print(f"experiment: {report.experiment}  "
              f"(wall clock {report.wall_clock:.2f} s)")
        for crit in report.criteria:
            if crit["passed"] is None:
                mark = "SKIP"
            else:
                mark = "PASS" if crit["passed"] else "FAIL"
            print(f"  [{mark}] {crit['name']}: {crit['detail']}")
        for warning in report.warnings:
            print(f"  warning: {warning}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
