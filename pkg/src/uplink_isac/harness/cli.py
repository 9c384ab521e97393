"""Command-line front end: ``uplink-isac <subcommand> --config FILE ...``."""

import argparse
import logging
import sys

from . import experiments as ex
from .config import ExperimentSpec, load_config, parse_config
from .output import emit_results

SINR_GRID = (0.0, 0.3, 0.7, 1.0)
COMMANDS = ("ber-sweep", "nmse-sweep", "sinr-check", "pep-check", "block-sweep", "ml-oracle")


def _parser():
    p = argparse.ArgumentParser(prog="uplink-isac", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="flat key = value scenario file")
        s.add_argument("--seed", type=int, help="base seed (overrides the config)")
        s.add_argument("--out", required=True, help="output path")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--profile", choices=("desk", "paper"), default="desk")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--no-timing", action="store_true",
                       help="write runtime_s as 0 for byte-stable output")
        if name in ("sinr-check", "pep-check"):
            s.add_argument("--trials", type=int, default=None)
        if name == "pep-check":
            s.add_argument("--target-powers", default="0,1",
                           help="comma list of received sensing powers P_s (W)")
            s.add_argument("--rhos", default="0,1")
            s.add_argument("--channels", type=int, default=1)
    return p


def _spec(args) -> ExperimentSpec:
    if args.config:
        spec = load_config(args.config, args.profile)
    else:
        spec = parse_config("", args.profile)
    if args.seed is not None:
        spec = spec.replace(seed=args.seed)
    return spec


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        return _run(args)
    except (ValueError, OSError) as exc:
        print(f"uplink-isac: error: {exc}", file=sys.stderr)
        return 2


def _run(args) -> int:
    spec = _spec(args)
    cmd = args.command
    if cmd == "sinr-check" and spec.sweep_var != "rho":
        spec = spec.replace(sweep_var="rho", grid=SINR_GRID)
    if cmd == "ber-sweep":
        rows = ex.run_ber_sweep(spec, args.workers)
    elif cmd == "nmse-sweep":
        rows = ex.run_nmse_sweep(spec, args.workers)
    elif cmd == "block-sweep":
        rows = ex.run_block_sweep(spec, args.workers)
    elif cmd == "sinr-check":
        rows = ex.run_sinr_validation(spec, args.trials or 10_000)
    elif cmd == "pep-check":
        rows = ex.run_pep_validation(
            spec, rhos=[float(v) for v in args.rhos.split(",")],
            p_s_list=[float(v) for v in args.target_powers.split(",")],
            n_trials=args.trials or 100_000, n_channels=args.channels)
    else:
        rows = [ex.run_ml_oracle_check(spec, args.workers)]
    emit_results(rows, args.format, args.out, spec=spec, timing=not args.no_timing)
    for r in rows:
        print(r)
    return 0


if __name__ == "__main__":
    sys.exit(main())
