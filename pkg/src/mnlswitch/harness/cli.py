"""Command line entry point.

    mnlswitch simulate --config exp.json
    mnlswitch sweep --config sweep.json
    mnlswitch verify
    mnlswitch instance gen uniform --n 10 --k 3 --seed 0 --out inst.json

Exit status is 0 on success, 1 when a run or check fails, 2 for a bad
configuration or bad arguments.
"""
from __future__ import annotations

import argparse
import sys
import warnings

from ..core import InvalidInstanceError
from ..instances import dumps, gen_lowerbound_base, gen_lowerbound_perturbed, gen_uniform_random
from .config import ConfigError, load_config
from .runner import WORKERS_ENV, run_experiment, worker_count

EXIT_OK, EXIT_RUN_FAILURE, EXIT_CONFIG_ERROR = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG_ERROR)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mnlswitch", description="MNL bandit switching-cost experiments.",
                     epilog=f"Set {WORKERS_ENV} to run that many simulations in parallel.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (("simulate", "run every policy/horizon/seed in a config"),
                            ("sweep", "run a horizon (and item-count) grid and fit scaling laws")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment JSON file")

    p = sub.add_parser("verify", help="run the oracle and statistics release checks")
    p.add_argument("--corrupt-tie-break", action="store_true", help=argparse.SUPPRESS)

    inst = sub.add_parser("instance", help="instance utilities")
    inst_sub = inst.add_subparsers(dest="action", required=True, parser_class=_Parser)
    gen = inst_sub.add_parser("gen", help="write a generated instance as JSON")
    fam = gen.add_subparsers(dest="family", required=True, parser_class=_Parser)

    u = fam.add_parser("uniform", help="rewards and weights drawn uniformly from [0, 1]")
    u.add_argument("--n", type=int, required=True)
    u.add_argument("--k", type=int, required=True)
    u.add_argument("--seed", type=int, default=0)

    b = fam.add_parser("lb-base", help="lower-bound base instance (all weights 1/2)")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--capacity", type=int, default=1)

    q = fam.add_parser("lb-perturbed", help="base instance with one item's weight raised")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--k-item", type=int, required=True, help="1-based index of the raised item")
    q.add_argument("--t1", type=int, required=True)
    q.add_argument("--capacity", type=int, default=1)

    for p in (u, b, q):
        p.add_argument("--out", help="output path (default: stdout)")
    return parser


def _experiment(args, sweep: bool) -> int:
    try:
        cfg = load_config(args.config, sweep=sweep)
        worker_count()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    summary = run_experiment(cfg, sweep=sweep)
    for f in summary["failures"]:
        print(f"run failed: policy={f['policy']} n={f['n_items']} T={f['horizon']} seed={f['seed']}: "
              f"{f['error']}", file=sys.stderr)
    for entry in summary["results"]:
        reg = entry["regret_summary"]
        if reg is None:
            continue
        print(f"{entry['policy']} n={entry['n_items']} T={entry['horizon']}: "
              f"regret {reg['mean']:.2f} asst {entry['asst_switches_summary']['mean']:.2f} "
              f"item {entry['item_switches_summary']['mean']:.2f}")
    for fit in summary.get("fits", []):
        sw = fit["asst_switches"]
        if "model" in sw:
            print(f"{fit['policy']} n={fit['n_items']}: assortment switches ~ {sw['model']} (r2 {sw['r2']:.3f})")
    print(f"summary written to {cfg.output_dir}/summary.json")
    return EXIT_RUN_FAILURE if summary["failures"] else EXIT_OK


def _instance_gen(args) -> int:
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.family == "uniform":
                inst = gen_uniform_random(args.n, args.k, seed=args.seed)
            elif args.family == "lb-base":
                inst = gen_lowerbound_base(args.n, capacity=args.capacity)
            else:
                inst = gen_lowerbound_perturbed(args.n, args.k_item, args.t1, capacity=args.capacity)
    except (InvalidInstanceError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    text = dumps(inst) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("simulate", "sweep"):
        return _experiment(args, sweep=args.command == "sweep")
    if args.command == "verify":
        from .verify import run_verify
        return EXIT_OK if run_verify(corrupt_tie_break=args.corrupt_tie_break) else EXIT_RUN_FAILURE
    return _instance_gen(args)


if __name__ == "__main__":
    sys.exit(main())
