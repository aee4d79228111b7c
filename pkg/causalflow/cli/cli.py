"""
subcommand router: every command module registers its own parser and
handler, errors become one machine-parsable line and an exit status
"""

import argparse
import json
import logging
import sys
from typing import List, NoReturn, Optional

from causalflow.__version__ import __version__
from causalflow.cli.commands import (
    ablate_cmd,
    eval_cmd,
    gen_data_cmd,
    grad_check_cmd,
    mask_dump_cmd,
    plan_cmd,
    train_cmd,
)
from causalflow.cli.options import common_parser
from causalflow.core.config import configure_logging, settings
from causalflow.models.causalflow_error import CausalFlowError
from causalflow.models.configuration_error import ConfigurationError

log = logging.getLogger("causalflow")

COMMANDS = (gen_data_cmd, train_cmd, eval_cmd, plan_cmd, mask_dump_cmd, grad_check_cmd, ablate_cmd)


class CommandParser(argparse.ArgumentParser):
    """Usage errors surface as ConfigurationError instead of exiting"""

    def error(self, message: str) -> NoReturn:
        raise ConfigurationError(f"{self.prog}: {message}")


def setup_parser() -> argparse.ArgumentParser:
    parser = CommandParser(
        prog=settings.PROJECT_NAME,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=settings.PROJECT_DESCRIPTION,
    )
    parser.add_argument("--version", "-V", action="version", version=f"{__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    parents = [common_parser()]
    for command in COMMANDS:
        command.register(subparsers, parents)
    return parser


def error_line(error: CausalFlowError) -> str:
    return f"error kind={type(error).__name__} status={error.status_code} msg={json.dumps(error.error_msg)}"


def run(argv: Optional[List[str]] = None) -> int:
    try:
        args = setup_parser().parse_args(argv)
        configure_logging(logging.DEBUG if args.debug else logging.INFO)
        return args.handler(args)
    except CausalFlowError as ce:
        print(error_line(ce), file=sys.stderr)
        return ce.status_code
    except Exception as ex:
        log.exception(ex)
        print(f"error kind={type(ex).__name__} status=1 msg={json.dumps(str(ex))}", file=sys.stderr)
        return 1
