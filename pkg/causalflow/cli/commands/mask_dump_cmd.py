import argparse

from causalflow.models.mask import DualStreamMask
from causalflow.services import masking_service

NAME = "mask-dump"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="print the dual-stream attention mask")
    parser.add_argument("--m", dest="m", type=int, required=True, help="visual tokens")
    parser.add_argument("--n", dest="n", type=int, required=True, help="flow queries")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    print(masking_service.format_mask(DualStreamMask(args.m, args.n)))
    return 0
