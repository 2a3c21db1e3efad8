"""Sound-matching commands: runs over shifts or initializations, and the shift sweep."""
import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional

import typer

from app.commands.base import (
    error_boundary,
    finish_record,
    get_state,
    output_path,
    parse_theta,
    start_record,
)
from app.schemas.loss import LossKind
from app.utils.experiments import MatchTask, matching_summary, run_matches, shift_sweep_taus
from app.utils.export import write_csv, write_trajectory_csv, write_trajectory_json
from app.utils.optim import init_scenarios, initial_learning_rate

logger = logging.getLogger(__name__)


class Scenario(str, Enum):
    SHIFT = "shift"
    FAR = "far"
    NEAR = "near"
    ANYWHERE = "anywhere"


class TrajectoryFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


SUMMARY_HEADER = ["run", "init_f_m", "init_gamma", "tau", "iterations", "final_f_m", "final_gamma",
                  "initial_distance", "final_distance", "stop_reason"]


@error_boundary
def match(
    ctx: typer.Context,
    loss: LossKind = typer.Option(LossKind.JTFS, "--loss", help="jtfs or mss"),
    target: Optional[str] = typer.Option(None, "--target", help="f_m,gamma of the target"),
    init: Optional[str] = typer.Option(None, "--init", help="f_m,gamma of the start point (shift scenario)"),
    tau: Optional[List[int]] = typer.Option(None, "--tau", help="Prediction shifts; repeat for several runs (default TAU_LIST)"),
    scenario: Scenario = typer.Option(Scenario.SHIFT, "--scenario", help="shift: one run per tau; far/near/anywhere: initialization study without shift"),
    max_iters: Optional[int] = typer.Option(None, "--max-iters", help="Iteration cap (default MAX_ITERS)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for the near/anywhere initializations"),
    no_rollback: bool = typer.Option(False, "--no-rollback", help="Keep rejected steps (ablation)"),
    fmt: TrajectoryFormat = typer.Option(TrajectoryFormat.CSV, "--format", help="Per-run trajectory format: csv or json"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory"),
):
    """Gradient-descent sound matching; one trajectory file per run (CSV or JSON) plus a summary CSV."""
    state = get_state(ctx)
    settings = state.settings
    point = parse_theta(target, settings.target())
    start = parse_theta(init, settings.init())
    iters = settings.MAX_ITERS if max_iters is None else max_iters
    directory = output_path(out, settings, f"match_{loss.value}_{scenario.value}")
    grid = settings.grid_spec()
    lr = initial_learning_rate(grid, settings.LEARNING_RATE)
    rollback = settings.ROLLBACK and not no_rollback
    cfg = settings.pipeline_config()

    if scenario is Scenario.SHIFT:
        runs = [(start, t) for t in (tau or settings.TAU_LIST)]
    else:
        inits = init_scenarios(point, grid, settings.SEED if seed is None else seed)[scenario.value]
        runs = [(p, 0) for p in inits]

    record = start_record("match", settings, {
        "loss": loss.value, "target": point.model_dump(), "scenario": scenario.value,
        "runs": [{"init": p.model_dump(), "tau": t} for p, t in runs],
        "max_iters": iters, "rollback": rollback, "format": fmt.value,
    })
    tasks = [MatchTask(loss, point, p, t, iters, settings.TOL, cfg, lr, rollback) for p, t in runs]
    trajectories = run_matches(tasks, workers=settings.WORKERS, quiet=state.quiet)

    outputs = []
    summary_rows = []
    for i, ((p, t), traj) in enumerate(zip(runs, trajectories)):
        if fmt is TrajectoryFormat.JSON:
            outputs.append(write_trajectory_json(traj, directory / f"run_{i:02d}.json"))
        else:
            outputs.append(write_trajectory_csv(traj, directory / f"run_{i:02d}.csv"))
        final = traj.final_theta
        summary_rows.append([i, p.f_m, p.gamma, t, traj.iterations, final.f_m, final.gamma,
                             traj.initial_distance, traj.final_distance, traj.stop_reason])
    summary_path = write_csv(directory / "summary.csv", SUMMARY_HEADER, summary_rows)
    outputs.append(summary_path)

    finish_record(record, summary_path, outputs, matching_summary(trajectories))
    typer.echo(str(summary_path))


@error_boundary
def shift_sweep(
    ctx: typer.Context,
    loss: LossKind = typer.Option(LossKind.JTFS, "--loss", help="jtfs or mss"),
    target: Optional[str] = typer.Option(None, "--target", help="f_m,gamma of the target"),
    init: Optional[str] = typer.Option(None, "--init", help="f_m,gamma of the start point"),
    tau_max: Optional[int] = typer.Option(None, "--tau-max", help="Largest shift; runs use 0 and 2^0 .. tau_max (default SHIFT_SWEEP_MAX)"),
    max_iters: Optional[int] = typer.Option(None, "--max-iters", help="Iteration cap (default MAX_ITERS)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output CSV path"),
):
    """Final parameter distance of one matching run per time shift."""
    state = get_state(ctx)
    settings = state.settings
    point = parse_theta(target, settings.target())
    start = parse_theta(init, settings.init())
    iters = settings.MAX_ITERS if max_iters is None else max_iters
    taus = shift_sweep_taus(settings.SHIFT_SWEEP_MAX if tau_max is None else tau_max)
    path = output_path(out, settings, f"shift_sweep_{loss.value}.csv")
    lr = initial_learning_rate(settings.grid_spec(), settings.LEARNING_RATE)
    cfg = settings.pipeline_config()

    record = start_record("shift-sweep", settings, {
        "loss": loss.value, "target": point.model_dump(), "init": start.model_dump(),
        "taus": taus, "max_iters": iters,
    })
    tasks = [MatchTask(loss, point, start, t, iters, settings.TOL, cfg, lr, settings.ROLLBACK) for t in taus]
    trajectories = run_matches(tasks, workers=settings.WORKERS, quiet=state.quiet)

    rows = [[t, traj.final_distance, traj.iterations] for t, traj in zip(taus, trajectories)]
    write_csv(path, ["tau", "final_distance", "iterations"], rows)
    finish_record(record, path, [path], matching_summary(trajectories))
    typer.echo(str(path))
