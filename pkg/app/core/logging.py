import logging

from rich.console import Console
from rich.logging import RichHandler

# third-party loggers that are too chatty at INFO
_QUIET_LOGGERS = ("asyncio", "numexpr", "matplotlib")


def setup_logging(level: str = "INFO") -> None:
    """Install a single stderr RichHandler on the root logger; later calls only change the level."""
    root = logging.getLogger()
    root.setLevel(level.upper())
    if any(getattr(h, "_mesostruct", False) for h in root.handlers):
        return

    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
        markup=False,
    )
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    handler._mesostruct = True
    root.addHandler(handler)

    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
