import logging
from pathlib import Path
from typing import Optional

import typer

from app.commands.base import CliState, error_boundary
from app.commands.match import match, shift_sweep
from app.commands.surface import chirps, field, surface
from app.commands.synth import coeffs, filters, synth
from app.core.config import load_settings
from app.core.logging import setup_logging
from app.schemas.error import ConfigurationError

logger = logging.getLogger(__name__)

cli = typer.Typer(
    name="mesostruct",
    help="Differentiable joint time-frequency scattering for sound matching of chirplet arpeggios.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)


@cli.callback()
@error_boundary
def configure(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", help="Experiment file with KEY=value lines"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1, help="Worker processes for grids and matching runs"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
    quiet: bool = typer.Option(False, "--quiet", help="No progress bars and warnings only"),
):
    """Global options shared by every subcommand."""
    if config is not None and not config.is_file():
        raise ConfigurationError(f"config file not found: {config}", hint="pass an existing env file to --config")
    settings = load_settings(config, WORKERS=workers, LOG_LEVEL=log_level)
    setup_logging("WARNING" if quiet else settings.LOG_LEVEL)
    logger.debug("Loaded settings: %s", settings.snapshot())
    ctx.obj = CliState(settings=settings, quiet=quiet)


cli.command("synth")(synth)
cli.command("coeffs")(coeffs)
cli.command("filters")(filters)
cli.command("surface")(surface)
cli.command("field")(field)
cli.command("chirps")(chirps)
cli.command("match")(match)
cli.command("shift-sweep")(shift_sweep)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
