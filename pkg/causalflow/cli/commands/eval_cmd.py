import argparse

from causalflow.cli.options import load_config, load_samples
from causalflow.services import experiment_service, metrics_service, model_service
from causalflow.services.checkpoint_service import load_checkpoint

NAME = "eval"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="evaluate a checkpoint on the held-out pages")
    parser.add_argument("--checkpoint", dest="checkpoint", required=True)
    parser.add_argument("--data", dest="data", default=None, help="dataset snapshot (default: regenerate)")
    parser.set_defaults(handler=run)


def summary_line(report) -> str:
    agg = report.aggregate
    return (
        f"count={agg.count} mean_ed={agg.mean_edit_distance:.6f} exact_match={agg.exact_match_rate:.6f} "
        f"repetition={agg.repetition_rate:.6f} failures={agg.failures} max_visual_tokens={agg.max_visual_tokens}"
    )


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    ckpt = load_checkpoint(args.checkpoint, cfg.digest())
    model = model_service.restore_model(ckpt)
    samples, _ = load_samples(args, cfg)
    report = experiment_service.evaluate_model(model, ckpt.stage, experiment_service.eval_split(samples, cfg), cfg)
    path = metrics_service.write_report(report, cfg.out_dir)
    print(f"{summary_line(report)} report={path}")
    return 0
