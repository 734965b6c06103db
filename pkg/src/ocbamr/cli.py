"""Command line: ``ocbamr run`` for PCS curves, ``ocbamr verify`` for optimality checks."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import verify
from .harness import estimate_pcs
from .oracles import BUILTIN, builtin_experiment, experiment_from_config
from .policies import POLICIES


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _name_list(text: str) -> list[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    unknown = [n for n in names if n not in POLICIES]
    if unknown or not names:
        raise argparse.ArgumentTypeError(f"unknown policies {unknown}; choose from {sorted(POLICIES)}")
    return names


def load_experiment(name: str):
    if name in BUILTIN:
        return builtin_experiment(name)
    path = Path(name)
    if not path.is_file():
        raise SystemExit(f"error: {name!r} is neither a built-in experiment ({', '.join(BUILTIN)}) nor a file")
    return experiment_from_config(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocbamr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log fit failures and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="estimate PCS curves and write them as CSV")
    run.add_argument("--experiment", required=True, help="exp1..exp5 or a JSON config file")
    run.add_argument("--policies", type=_name_list, default=None,
                     help="comma list of policies (default: the experiment's own)")
    run.add_argument("--budgets", type=_int_list, required=True, help="comma list of total budgets")
    run.add_argument("--reps", type=int, default=2000, help="macro-replications per point")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    run.add_argument("--variance-mode", choices=("known", "estimated"), default="estimated")
    run.add_argument("--workers", type=int, default=1, help="worker processes")

    ver = sub.add_parser("verify", help="run the oracle-based optimality checks")
    ver.add_argument("--only", type=lambda s: s.split(","), default=None,
                     help=f"subset of {','.join(verify.CHECKS)}")
    return parser


def cmd_run(args) -> int:
    spec = load_experiment(args.experiment)
    policies = args.policies or list(spec.policies)
    try:
        curve = estimate_pcs(spec, policies, args.budgets, args.reps, master_seed=args.seed,
                             variance_mode=args.variance_mode, workers=args.workers)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out == "-":
        sys.stdout.write(curve.to_csv())
    else:
        curve.to_csv(args.out)
    return 0


def cmd_verify(args) -> int:
    names = args.only or list(verify.CHECKS)
    bad = [n for n in names if n not in verify.CHECKS]
    if bad:
        print(f"error: unknown checks {bad}", file=sys.stderr)
        return 2
    ok = True
    for result in verify.run_all(names):
        print(result.line())
        ok &= result.passed
    return 0 if ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return cmd_run(args) if args.command == "run" else cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
