"""Shared plumbing for the subcommands: settings access, argument parsing, error boundary, records."""
import functools
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import typer
from pydantic import ValidationError

from app.core.config import Settings
from app.schemas.error import (
    INTERNAL_ERROR,
    VALIDATION_ERROR,
    ConfigurationError,
    ErrorResponse,
    MesostructError,
    NumericDomainError,
)
from app.schemas.experiment import ExperimentRecord
from app.schemas.synth import ThetaPoint
from app.utils.export import write_record
from app.utils.uuid import experiment_id

logger = logging.getLogger(__name__)


@dataclass
class CliState:
    settings: Settings
    quiet: bool = False


def get_state(ctx: typer.Context) -> CliState:
    state = ctx.find_root().obj
    if not isinstance(state, CliState):
        raise ConfigurationError("command invoked without the global options callback")
    return state


def emit_error(response: ErrorResponse) -> None:
    """Write the machine-readable error line to stderr."""
    typer.echo(response.model_dump_json(exclude_none=True), err=True)


def _validation_detail(error: ValidationError) -> str:
    first = error.errors()[0]
    where = ".".join(str(p) for p in first.get("loc", ())) or "input"
    return f"{where}: {first.get('msg', 'invalid value')}"


def error_boundary(fn: Callable) -> Callable:
    """Turn library errors into one JSON line on stderr and the matching exit code."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MesostructError as e:
            response = e.to_response()
        except ValidationError as e:
            response = VALIDATION_ERROR(_validation_detail(e))
        except (typer.Exit, typer.Abort):
            raise
        except Exception as e:
            logger.exception("Unexpected failure in %s", fn.__name__)
            response = INTERNAL_ERROR(f"{type(e).__name__}: {e}")
        emit_error(response)
        raise typer.Exit(code=response.exit_code)
    return wrapper


def parse_theta(text: Optional[str], default: ThetaPoint) -> ThetaPoint:
    """
    Parse ``"f_m,gamma"``; None gives ``default``

    Raises:
        ConfigurationError: if the text is not two numbers
        NumericDomainError: if either value is not positive
    """
    if text is None:
        return default
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        f_m, gamma = (float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(f"expected 'f_m,gamma', got {text!r}", hint="write theta as f_m,gamma, e.g. 8.49,1.49")
    if f_m <= 0 or gamma <= 0:
        raise NumericDomainError("theta", f"f_m and gamma must be positive, got ({f_m}, {gamma})")
    return ThetaPoint(f_m=f_m, gamma=gamma)


def parse_floats(text: Optional[str], default: List[float]) -> List[float]:
    if text is None:
        return list(default)
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}")


def output_path(out: Optional[Path], settings: Settings, default_name: str) -> Path:
    return out if out is not None else settings.OUTPUT_DIR / default_name


def start_record(command: str, settings: Settings, parameters: Dict[str, Any]) -> ExperimentRecord:
    return ExperimentRecord(
        id=experiment_id(command),
        command=command,
        config=settings.snapshot(),
        parameters={k: (str(v) if isinstance(v, Path) else v) for k, v in parameters.items()},
    )


def finish_record(
    record: ExperimentRecord,
    main_output: Path,
    outputs: List[Path],
    summary: Optional[Dict[str, Any]] = None,
    results: Optional[List[Dict[str, Any]]] = None,
) -> Path:
    """Fill in outputs and summary and write the ``<out>.json`` sidecar."""
    record.outputs = [str(p) for p in outputs]
    record.summary = summary or {}
    record.results = results
    record.finished_at = datetime.now(timezone.utc)
    return write_record(record, main_output)
