import argparse

from causalflow.cli.commands.eval_cmd import summary_line
from causalflow.cli.options import load_config, load_samples
from causalflow.services import experiment_service

NAME = "ablate"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="causal-flow encoder against the raster baseline")
    parser.add_argument("--data", dest="data", default=None, help="dataset snapshot (default: regenerate)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    samples, _ = load_samples(args, cfg)
    reports = experiment_service.run_ablation(cfg, samples, out_dir=cfg.out_dir)
    for mode, report in reports.items():
        print(f"mode={mode} {summary_line(report)}")
    return 0
