import argparse
from pathlib import Path

from causalflow.cli.options import load_config
from causalflow.services import synthetic_service

NAME = "gen-data"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="generate a synthetic dataset snapshot")
    parser.add_argument("--data", dest="data", default=None, help="target directory (default: <out>/data)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Writes one PGM per sample plus the manifest
    """
    cfg = load_config(args)
    target = args.data or str(Path(cfg.out_dir) / "data")
    samples, manifest = synthetic_service.make_dataset(cfg.seed, cfg.data)
    synthetic_service.write_snapshot(samples, manifest, target)
    counts = ",".join(f"{k}:{n}" for k, n in manifest.counts.items())
    print(f"samples={len(samples)} counts={counts} manifest={synthetic_service.manifest_digest(manifest)} dir={target}")
    return 0
