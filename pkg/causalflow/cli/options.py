"""
flags shared by every subcommand and the config/dataset loading they drive
"""

import argparse
import logging
from typing import List, Tuple

from causalflow.models.document import Sample
from causalflow.schemas.run.config import RunConfig, load_run_config
from causalflow.services import synthetic_service

log = logging.getLogger("causalflow")


def common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", "-c", dest="config", default=None, help="key-value run configuration file")
    parser.add_argument("--seed", dest="seed", type=int, default=None, help="overrides the configured seed")
    parser.add_argument("--out", "-o", dest="out", default=None, help="overrides the configured output directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one dotted config key; repeatable",
    )
    parser.add_argument("--debug", dest="debug", action="store_true", default=False)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out is not None:
        overrides.append(f"out_dir={args.out}")
    return load_run_config(args.config, overrides)


def load_samples(args: argparse.Namespace, cfg: RunConfig) -> Tuple[List[Sample], str]:
    """Samples from --data when given, otherwise regenerated from the config"""
    data_dir = getattr(args, "data", None)
    if data_dir:
        samples, manifest = synthetic_service.load_dataset(data_dir)
        return samples, synthetic_service.manifest_digest(manifest)
    log.info("no --data given, generating %d samples from the config", cfg.data.count)
    samples, manifest = synthetic_service.make_dataset(cfg.seed, cfg.data)
    return samples, synthetic_service.manifest_digest(manifest)

