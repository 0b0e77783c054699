import argparse
import logging
import sys
from typing import Optional, Sequence

from .commands import router
from .config import get_settings


def configure_logging(args: argparse.Namespace) -> None:
    level = "DEBUG" if getattr(args, "verbose", False) else get_settings().log_level
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


router.setup = configure_logging


def main(argv: Optional[Sequence[str]] = None) -> int:
    return router.run(argv)


if __name__ == "__main__":
    sys.exit(main())
