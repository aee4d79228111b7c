# -*- coding: utf-8 -*-
#
# causalflow : desk-scale causal-flow visual encoder
# License : BSD-3-Clause


"""
causalflow
~~~~~~~~~~

train and evaluate a causal-flow visual encoder on synthetic pages
"""

# stdlib imports
import os
import platform
import sys
from typing import List, Optional

# app imports
from .cli.cli import run


def main(argv: Optional[List[str]] = None) -> int:
    return run(argv)


def init() -> None:
    """Handle main init"""
    # hard set no support for python < v3.9
    if sys.version_info < (3, 9):
        sys.exit(
            "{0} requires Python version 3.9 or higher...\nyou are trying to run with Python version {1}...\nexiting...".format(
                os.path.basename(__file__), platform.python_version()
            )
        )

    if __name__ == "__main__":
        sys.exit(main())


init()
