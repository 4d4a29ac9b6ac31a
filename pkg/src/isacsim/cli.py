"""Console entry point: run sweeps or validate config files.

Exit codes: 0 success, 1 config problem, 2 IO problem.
"""

import argparse
import sys
from dataclasses import replace

from .errors import IsacSimError
from .optimizer import SCHEMES
from .simharness import SWEEP_VARS, emit_csv, load_config, run_sweep, with_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isac-sim",
        description="Monte-Carlo sweeps for a hybrid-RIS ISAC downlink design.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep and write the CSV")
    run.add_argument("--config", required=True, help="path to the config file")
    run.add_argument("--profile", choices=("desk", "paper"), default="desk",
                     help="scale preset applied before the config file (default: desk)")
    run.add_argument("--sweep", choices=SWEEP_VARS, default=None,
                     help="override the sweep variable (stock value grid)")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--schemes", default=None,
                     help="comma-separated subset of " + ",".join(SCHEMES))
    run.add_argument("--out", default=None, help="override the output CSV path")
    run.add_argument("--jobs", type=int, default=1,
                     help="parallel worker processes (default: 1)")

    val = sub.add_parser("validate", help="parse and check a config file")
    val.add_argument("--config", required=True, help="path to the config file")
    val.add_argument("--profile", choices=("desk", "paper"), default="desk")
    return parser


def _load(args, stderr):
    try:
        cfg = load_config(args.config, profile=args.profile)
    except IsacSimError as exc:
        print(f"config error: {exc}", file=stderr)
        return None, EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=stderr)
        return None, EXIT_IO
    return cfg, EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    stderr = sys.stderr

    cfg, code = _load(args, stderr)
    if cfg is None:
        return code

    if args.command == "validate":
        print(
            f"ok: M={cfg.m_antennas} N={cfg.n_ris} K={cfg.num_users} T={cfg.num_targets} "
            f"L={cfg.n_active} sweep={cfg.sweep_var}{list(cfg.sweep_values)} "
            f"realizations={cfg.realizations} schemes={','.join(cfg.schemes)}"
        )
        return EXIT_OK

    try:
        if args.sweep is not None and args.sweep != cfg.sweep_var:
            cfg = with_sweep(cfg, args.sweep)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed).validate()
        if args.schemes is not None:
            names = tuple(s for s in args.schemes.replace(",", " ").split())
            cfg = replace(cfg, schemes=names).validate()
        if args.out is not None:
            cfg = replace(cfg, output=args.out)
    except IsacSimError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG

    rows = run_sweep(cfg, jobs=args.jobs)
    try:
        emit_csv(rows, cfg.output)
    except OSError as exc:
        print(f"io error: {exc}", file=stderr)
        return EXIT_IO

    counts = {}
    for row in rows:
        counts[row.status] = counts.get(row.status, 0) + 1
    tally = " ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    print(f"wrote {cfg.output}: {len(rows)} rows ({tally})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
