"""Signal-level commands: render an arpeggio, export its JTFS coefficients, dump filter responses."""
import logging
from enum import Enum
from pathlib import Path
from typing import Optional

import typer

from app.commands.base import (
    error_boundary,
    finish_record,
    get_state,
    output_path,
    parse_theta,
    start_record,
)
from app.schemas.synth import SynthConfig
from app.utils.export import (
    write_coefficients_csv,
    write_coefficients_json,
    write_filter_responses,
    write_wav,
)
from app.utils.scattering import build_plan, jtfs
from app.utils.synth import event_count, synthesize

logger = logging.getLogger(__name__)


class CoeffFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class BankName(str, Enum):
    LAMBDA = "lambda"
    ALPHA = "alpha"
    BETA = "beta"


@error_boundary
def synth(
    ctx: typer.Context,
    theta: Optional[str] = typer.Option(None, "--theta", help="f_m,gamma (default: the configured target)"),
    tau: int = typer.Option(0, "--tau", help="Delay in samples"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output WAV path"),
    wav_format: Optional[str] = typer.Option(None, "--format", help="pcm16 or float32"),
):
    """Render one normalized arpeggio to a mono WAV file."""
    state = get_state(ctx)
    settings = state.settings
    point = parse_theta(theta, settings.target())
    cfg: SynthConfig = settings.synth_config()
    path = output_path(out, settings, "synth.wav")
    fmt = wav_format or settings.WAV_FORMAT

    record = start_record("synth", settings, {"theta": point.model_dump(), "tau": tau, "format": fmt})
    signal = synthesize(point, cfg, tau=tau)
    write_wav(signal, path, fmt)
    summary = {
        "duration_s": signal.duration,
        "peak": float(abs(signal.values).max()),
        "event_count": event_count(point, cfg.w),
    }
    finish_record(record, path, [path], summary)
    typer.echo(str(path))


@error_boundary
def coeffs(
    ctx: typer.Context,
    theta: Optional[str] = typer.Option(None, "--theta", help="f_m,gamma (default: the configured target)"),
    tau: int = typer.Option(0, "--tau", help="Delay in samples"),
    fmt: CoeffFormat = typer.Option(CoeffFormat.CSV, "--format", help="csv or json"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output path"),
):
    """Export the JTFS coefficients of one arpeggio with their path metadata."""
    settings = get_state(ctx).settings
    point = parse_theta(theta, settings.target())
    path = output_path(out, settings, f"coeffs.{fmt.value}")

    record = start_record("coeffs", settings, {"theta": point.model_dump(), "tau": tau, "format": fmt.value})
    signal = synthesize(point, settings.synth_config(), tau=tau)
    result = jtfs(signal, settings.scattering_config())
    if fmt is CoeffFormat.CSV:
        write_coefficients_csv(result, path)
    else:
        write_coefficients_json(result, path, config=settings.snapshot())
    summary = {
        "coefficients": len(result),
        "s1_paths": len(result.s1_paths),
        "s2_paths": len(result.s2_paths),
        "frames": result.s1.shape[-1],
    }
    finish_record(record, path, [path], summary)
    typer.echo(str(path))


@error_boundary
def filters(
    ctx: typer.Context,
    bank: BankName = typer.Option(BankName.LAMBDA, "--bank", help="lambda (first order), alpha (temporal modulation) or beta (frequential)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output CSV path"),
):
    """Dump the frequency responses of one filterbank to CSV."""
    settings = get_state(ctx).settings
    path = output_path(out, settings, f"filters_{bank.value}.csv")
    plan = build_plan(settings.scattering_config(), settings.NUM_SAMPLES, float(settings.SAMPLE_RATE))
    selected = {
        BankName.LAMBDA: plan.lambda_bank,
        BankName.ALPHA: plan.alpha_bank,
        BankName.BETA: plan.beta_bank,
    }[bank]

    record = start_record("filters", settings, {"bank": bank.value})
    write_filter_responses(selected, path)
    summary = {
        "filters": len(selected),
        "length": selected.length,
        "lowest_center": float(selected.center_freqs[0]),
        "highest_center": float(selected.center_freqs[-1]),
    }
    finish_record(record, path, [path], summary)
    typer.echo(str(path))
