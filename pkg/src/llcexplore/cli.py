"""Command-line entry point: ``run``, ``evaluate`` and ``llcs``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from llcexplore.accuracy import evaluate_accuracy, load_domain, \
    load_perfect_models, load_test_states
from llcexplore.experiment import MODES, ConfigError, ExperimentConfig, \
    run_experiment
from llcexplore.learner import load_models
from llcexplore.llc import dump_llcs, generate_llcs
from llcexplore.pddl import PDDLError

log = logging.getLogger("llcexplore")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="llcexplore",
        description="Exploratory action-model learning with lifted linked "
        "clauses.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the exploration experiment")
    r.add_argument("--scenario", type=Path, required=True)
    r.add_argument("--mode", choices=list(MODES) + ["all"], default="all")
    r.add_argument("--steps", type=int, default=4000)
    r.add_argument("--runs", type=int, default=3)
    r.add_argument("--llc-size", type=int, default=2)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--grounding",
                   choices=["uniform", "adjacent"],
                   default="uniform")
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--domain", type=Path, default=None)
    r.add_argument("--tests", type=Path, default=None)
    r.add_argument("--max-negatives", type=int, default=None)
    r.add_argument("--workers", type=int, default=None)

    e = sub.add_parser("evaluate",
                       help="score a models file against the perfect model")
    e.add_argument("--models", type=Path, required=True)
    e.add_argument("--tests", type=Path, default=None)
    e.add_argument("--domain", type=Path, default=None)
    e.add_argument("--csv", action="store_true",
                   help="print comma-separated instead of aligned text")

    g = sub.add_parser("llcs", help="dump the generated LLCs")
    g.add_argument("--domain", type=Path, default=None)
    g.add_argument("--size", type=int, default=2)
    return p


def _cmd_run(args: argparse.Namespace) -> int:
    modes = tuple(MODES) if args.mode == "all" else (args.mode, )
    cfg = ExperimentConfig(scenario=args.scenario,
                           out=args.out,
                           modes=modes,
                           runs=args.runs,
                           steps=args.steps,
                           llc_size=args.llc_size,
                           seed=args.seed,
                           grounding=args.grounding,
                           domain=args.domain,
                           tests=args.tests,
                           max_negatives=args.max_negatives,
                           workers=args.workers)
    out = run_experiment(cfg)
    sys.stdout.write((out / "summary.txt").read_text(encoding="utf-8"))
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    domain = load_domain(args.domain)
    models = load_models(args.models, domain)
    report = evaluate_accuracy(models, load_perfect_models(domain),
                               load_test_states(domain, args.tests))
    sys.stdout.write(report.to_csv() if args.csv else report.to_text())
    return 0


def _cmd_llcs(args: argparse.Namespace) -> int:
    if args.size < 1:
        raise ConfigError("size must be at least 1")
    domain = load_domain(args.domain)
    dump_llcs(generate_llcs(domain, args.size), sys.stdout)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(
        None if argv is None else list(argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else
                        logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "evaluate": _cmd_evaluate, "llcs": _cmd_llcs}
    try:
        return handlers[args.command](args)
    except (ConfigError, PDDLError, ValueError, OSError) as exc:
        sys.stderr.write(f"llcexplore {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
