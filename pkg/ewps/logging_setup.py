"""Logging configuration for the command-line entry point."""
import logging

from rich.console import Console
from rich.logging import RichHandler

from ewps.config import settings


def configure_logging(verbose: bool = False) -> None:
    """Route all package loggers to a rich handler on stderr; library code never calls this."""
    level = logging.DEBUG if verbose or settings.DEBUG else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
    logging.basicConfig(level=level, format="%(message)s", datefmt="[%X]", handlers=[handler], force=True)
