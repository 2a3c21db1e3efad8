"""Loss-landscape commands: loss surface, gradient field and the chirp comparison table."""
import logging
from pathlib import Path
from typing import Optional

import typer

from app.commands.base import (
    error_boundary,
    finish_record,
    get_state,
    output_path,
    parse_floats,
    parse_theta,
    start_record,
)
from app.schemas.loss import LossKind
from app.utils.experiments import chirp_pairs, field_alignment, run_grid, surface_summary
from app.utils.export import write_csv

logger = logging.getLogger(__name__)

SURFACE_HEADER = ["f_m", "gamma", "tau", "loss"]
FIELD_HEADER = ["f_m", "gamma", "tau", "grad_f_m", "grad_gamma"]


def _grid_rows(ctx, loss, target, tau, grid, random_tau, seed):
    state = get_state(ctx)
    settings = state.settings
    point = parse_theta(target, settings.target())
    spec = settings.grid_spec(grid)
    shift = settings.TAU if tau is None else tau
    rows = run_grid(
        loss, spec, point, shift, settings.pipeline_config(),
        workers=settings.WORKERS,
        random_tau=random_tau,
        seed=settings.SEED if seed is None else seed,
        quiet=state.quiet,
    )
    return settings, point, spec, shift, rows


@error_boundary
def surface(
    ctx: typer.Context,
    loss: LossKind = typer.Option(LossKind.JTFS, "--loss", help="jtfs or mss"),
    target: Optional[str] = typer.Option(None, "--target", help="f_m,gamma of the target"),
    tau: Optional[int] = typer.Option(None, "--tau", help="Prediction shift in samples (default TAU)"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Points per axis (default GRID_POINTS)"),
    random_tau: bool = typer.Option(False, "--random-tau", help="Shift each prediction by 2^n samples, n drawn from 8..12"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for --random-tau"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output CSV path"),
):
    """Loss against a fixed target over the (f_m, gamma) grid."""
    settings = get_state(ctx).settings
    path = output_path(out, settings, f"surface_{loss.value}.csv")
    record = start_record("surface", settings, {
        "loss": loss.value, "target": target, "tau": tau, "grid": grid, "random_tau": random_tau, "seed": seed,
    })
    settings, point, spec, shift, rows = _grid_rows(ctx, loss, target, tau, grid, random_tau, seed)

    write_csv(path, SURFACE_HEADER, ([r[k] for k in SURFACE_HEADER] for r in rows))
    summary = surface_summary(rows, spec, point)
    logger.info("%s surface argmin at (%.4g, %.4g); target cell hit: %s",
                loss.value, summary["argmin_f_m"], summary["argmin_gamma"], summary["argmin_is_target"])
    finish_record(record, path, [path], summary, results=rows)
    typer.echo(str(path))


@error_boundary
def field(
    ctx: typer.Context,
    loss: LossKind = typer.Option(LossKind.JTFS, "--loss", help="jtfs or mss"),
    target: Optional[str] = typer.Option(None, "--target", help="f_m,gamma of the target"),
    tau: Optional[int] = typer.Option(None, "--tau", help="Prediction shift in samples (default TAU)"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Points per axis (default GRID_POINTS)"),
    random_tau: bool = typer.Option(False, "--random-tau", help="Shift each prediction by 2^n samples, n drawn from 8..12"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for --random-tau"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output CSV path"),
):
    """Loss gradients over the (f_m, gamma) grid."""
    settings = get_state(ctx).settings
    path = output_path(out, settings, f"field_{loss.value}.csv")
    record = start_record("field", settings, {
        "loss": loss.value, "target": target, "tau": tau, "grid": grid, "random_tau": random_tau, "seed": seed,
    })
    settings, point, spec, shift, rows = _grid_rows(ctx, loss, target, tau, grid, random_tau, seed)

    write_csv(path, FIELD_HEADER, ([r[k] for k in FIELD_HEADER] for r in rows))
    alignment = field_alignment(rows, point)
    logger.info("%s field: %.1f%% of gradients point towards the target", loss.value, 100 * alignment)
    finish_record(record, path, [path], {"alignment": alignment}, results=rows)
    typer.echo(str(path))


@error_boundary
def chirps(
    ctx: typer.Context,
    gammas: Optional[str] = typer.Option(None, "--gammas", help="Comma-separated chirp rates (default CHIRP_GAMMAS)"),
    delay: int = typer.Option(2 ** 10, "--delay", help="Delay of the displaced chirp in samples"),
    ratio: float = typer.Option(2.0, "--ratio", help="Rate ratio of the overlapping chirp"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output CSV path"),
):
    """JTFS and MSS distances: time-displaced equal-rate chirps vs overlapping different-rate chirps."""
    settings = get_state(ctx).settings
    rates = parse_floats(gammas, settings.CHIRP_GAMMAS)
    path = output_path(out, settings, "chirps.csv")
    record = start_record("chirps", settings, {"gammas": rates, "delay": delay, "ratio": ratio})

    rows = chirp_pairs(rates, settings.pipeline_config(), delay_samples=delay, rate_ratio=ratio)
    write_csv(path, ["gamma", "case", "jtfs", "mss"], ([r["gamma"], r["case"], r["jtfs"], r["mss"]] for r in rows))
    ordered = sum(
        displaced["jtfs"] < rate["jtfs"]
        for displaced, rate in zip(rows[0::2], rows[1::2])
    )
    finish_record(record, path, [path], {"jtfs_ordered": int(ordered), "gammas": len(rates)}, results=rows)
    typer.echo(str(path))
