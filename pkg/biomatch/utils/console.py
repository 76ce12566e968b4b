import logging

from rich.console import Console
from rich.logging import RichHandler

# diagnostics go to stderr; stdout carries machine-readable records only
console = Console(stderr=True)


def setup_logging(verbose: bool = False) -> None:
    """Route the ``biomatch`` loggers through rich on stderr."""
    logger = logging.getLogger("biomatch")
    logger.handlers.clear()
    handler = RichHandler(console=console, show_path=False, rich_tracebacks=verbose)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False
