import argparse
import logging

from causalflow.cli.options import load_config
from causalflow.numerics.numerics_errors import NumericsError
from causalflow.services import experiment_service

NAME = "grad-check"

log = logging.getLogger("causalflow")


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="finite-difference check of the full model")
    parser.add_argument("--coordinates", dest="coordinates", type=int, default=64, help="sampled per group")
    parser.add_argument("--tolerance", dest="tolerance", type=float, default=1e-4)
    parser.add_argument("--stats", dest="stats", action="store_true", default=False, help="also count attention scores")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    errors = experiment_service.grad_check_suite(cfg, cfg.seed, coordinates=args.coordinates)
    for group, error in errors.items():
        print(f"group={group} max_rel_error={error:.3e}")
    worst = max(errors.values())
    print(f"max_rel_error={worst:.3e}")
    if args.stats:
        print(f"score_evaluations={experiment_service.attention_stats(cfg, cfg.seed).score_evaluations}")
    if worst >= args.tolerance:
        raise NumericsError(f"Gradient check failed: {worst:.3e} >= {args.tolerance:.1e}")
    return 0
