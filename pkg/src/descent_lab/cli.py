"""Command-line front end.

Four subcommands: ``run`` executes a JSON experiment config, ``figure``
builds one of the shipped comparison charts, ``certify`` replays a config
and checks every per-step certificate, and ``bound`` prints a closed-form
worst-case rate. Exit codes are part of the contract: 0 success, 1 a
certificate failed, 2 the config or arguments are invalid, 3 a solver broke
down at run time.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .descent import rate_bound
from .errors import ConfigError, SolverError
from .harness import (
    FIGURE_NAMES,
    ExperimentConfig,
    build_figure_experiment,
    certify_experiment,
    run_experiment,
    write_outputs,
)

EXIT_OK = 0
EXIT_CERT_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

BOUND_KINDS = {"b11": "grad_norm", "b22": "convex", "b33": "grad_dominated"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="descent-lab",
        description="Run, chart, and certify rescaled gradient experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("--config", required=True, help="path to a JSON config")
    run_p.add_argument("--out", default=None, help="output directory")

    fig_p = sub.add_parser("figure", help="build a shipped comparison figure")
    fig_p.add_argument("--name", required=True, choices=FIGURE_NAMES)
    fig_p.add_argument("--out", default=".", help="output directory")
    fig_p.add_argument("--seed", type=int, default=0, help="data seed")

    cert_p = sub.add_parser("certify", help="replay a config and check certificates")
    cert_p.add_argument("--config", required=True, help="path to a JSON config")

    bound_p = sub.add_parser("bound", help="print a closed-form rate bound")
    bound_p.add_argument("--kind", required=True, choices=sorted(BOUND_KINDS))
    bound_p.add_argument("--k", required=True, type=int, help="iteration count")
    bound_p.add_argument("--p", default="2", help="order (integer or 'inf')")
    bound_p.add_argument("--delta", type=float, required=True, help="descent delta")
    bound_p.add_argument("--e0", type=float, required=True, help="starting gap")
    bound_p.add_argument("--r", type=float, default=None, help="iterate radius bound")
    bound_p.add_argument("--mu", type=float, default=None, help="domination modulus")
    bound_p.add_argument(
        "--mode",
        choices=("current", "next"),
        default="current",
        help="where the per-step guarantee reads its gradient",
    )
    return parser


def _load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return ExperimentConfig.from_json(text)


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    records = run_experiment(config)
    directory = args.out or config.outputs.get("directory") or "."
    written = write_outputs(config, records, directory)
    for record in records:
        if record.error is not None:
            print(f"{record.method}: ERROR {record.error}")
        else:
            final = record.rows[-1]
            print(
                f"{record.method}: k={final[0]} grad_evals={final[1]}"
                f" f_gap={final[2]:.6e}"
            )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_figure(args) -> int:
    config = build_figure_experiment(args.name, seed=args.seed)
    records = run_experiment(config)
    written = write_outputs(config, records, args.out)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_certify(args) -> int:
    config = _load_config(args.config)
    ok, lines = certify_experiment(config)
    for line in lines:
        print(line)
    return EXIT_OK if ok else EXIT_CERT_FAILED


def _cmd_bound(args) -> int:
    if args.p == "inf":
        p = math.inf
    else:
        try:
            p = float(args.p)
        except ValueError:
            raise ConfigError(f"--p must be a number or 'inf', got {args.p!r}")
    try:
        value = rate_bound(
            BOUND_KINDS[args.kind],
            args.k,
            p=p,
            delta=args.delta,
            E0=args.e0,
            R=args.r,
            mu=args.mu,
            mode=args.mode,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(repr(value))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "figure": _cmd_figure,
        "certify": _cmd_certify,
        "bound": _cmd_bound,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
