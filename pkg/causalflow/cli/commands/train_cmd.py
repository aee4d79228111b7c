import argparse
import logging
from pathlib import Path

from causalflow.cli.options import load_config, load_samples
from causalflow.core.config import settings
from causalflow.models.configuration_error import ConfigurationError
from causalflow.services import model_service, synthetic_service, training_service
from causalflow.services.checkpoint_service import checkpoint_of, load_checkpoint, save_checkpoint

NAME = "train"

log = logging.getLogger("causalflow")


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="run one training stage or the whole schedule")
    parser.add_argument("--stage", dest="stage", choices=["1", "2", "3", "all"], default="all")
    parser.add_argument("--data", dest="data", default=None, help="dataset snapshot (default: regenerate)")
    parser.add_argument("--checkpoint", dest="checkpoint", default=None, help="start from this checkpoint")
    parser.add_argument(
        "--resume",
        dest="resume",
        action="store_true",
        default=False,
        help="continue the checkpoint's own stage instead of starting the next one",
    )
    parser.add_argument("--until", dest="until", type=int, default=None, help="stop after this step")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Checkpoints land in <out>/stage<N>.ckpt and every step appends to the
    metrics log
    """
    cfg = load_config(args)
    samples, _ = load_samples(args, cfg)
    train, _ = synthetic_service.split_holdout(samples, cfg.data.holdout)
    out_dir = Path(cfg.out_dir)

    if args.stage == "all":
        if args.checkpoint:
            raise ConfigurationError("--stage all always starts from a fresh model")
        training_service.run_schedule(cfg, train, cfg.seed, out_dir=str(out_dir))
        print(f"stages=1,2,3 checkpoint={out_dir / 'stage3.ckpt'} digest={cfg.digest()}")
        return 0

    stage = int(args.stage)
    resume = None
    if args.checkpoint:
        ckpt = load_checkpoint(args.checkpoint, cfg.digest())
        model = model_service.restore_model(ckpt)
        if args.resume:
            if ckpt.stage != stage:
                raise ConfigurationError(f"--resume needs a stage {stage} checkpoint, got stage {ckpt.stage}")
            resume = ckpt
    elif stage == 1:
        model = model_service.build_model(cfg, cfg.seed, model_service.lightweight_decoder(cfg))
    else:
        log.warning("stage %d without --checkpoint starts from a freshly initialised model", stage)
        model = model_service.build_model(cfg, cfg.seed)

    training_service.enter_stage(model, cfg, stage, cfg.seed)
    result = training_service.run_stage(
        cfg.training.stage_plan(stage),
        model,
        train,
        cfg.seed,
        resume=resume,
        until=args.until,
        metrics_path=out_dir / settings.METRICS_FILE,
        log_every=cfg.training.log_every,
    )
    path = save_checkpoint(
        str(out_dir / f"stage{stage}.ckpt"),
        checkpoint_of(model, cfg, result.optimizer, result.rng_state, result.step, stage),
    )
    final = f"{result.records[-1].loss:.6f}" if result.records else "nan"
    print(f"stage={stage} step={result.step} loss={final} checkpoint={path} digest={cfg.digest()}")
    return 0
