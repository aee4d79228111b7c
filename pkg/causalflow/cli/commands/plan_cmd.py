import argparse

from causalflow.cli.options import load_config
from causalflow.schemas.planner.plan import PlannerConfig
from causalflow.services import planner_service

NAME = "plan"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="print the crop plan and token budget of a page")
    parser.add_argument("--width", dest="width", type=int, required=True)
    parser.add_argument("--height", dest="height", type=int, required=True)
    parser.add_argument(
        "--paper-constants",
        "--full-scale",
        dest="full_scale",
        action="store_true",
        default=False,
        help="1024 global canvas, 768 local canvas, 256/144 tokens per view",
    )
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    planner = PlannerConfig.full_scale() if args.full_scale else load_config(args).planner
    crop_plan = planner_service.plan(args.width, args.height, planner)
    print(planner_service.describe(crop_plan, planner))
    return 0
