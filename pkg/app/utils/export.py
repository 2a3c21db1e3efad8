"""Writers for WAV, CSV and JSON outputs.

CSV floats are written with ``repr`` so re-reading them gives the exact
values back.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.io import wavfile

from app.schemas.error import ExportError
from app.schemas.experiment import ExperimentRecord
from app.schemas.optim import Trajectory
from app.utils.filterbank import WaveletBank
from app.utils.scattering import JtfsCoeffs
from app.utils.synth import Signal

logger = logging.getLogger(__name__)

WAV_FORMATS = ("pcm16", "float32")


def _prepare(path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ExportError(f"cannot create directory {path.parent}: {e}") from e
    return path


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = _prepare(path)
    try:
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}") from e
    logger.info("Wrote %s", path)
    return path


def read_csv(path: Path) -> List[dict]:
    """Rows as dicts of strings (callers convert with float())."""
    with Path(path).open(newline="") as f:
        return list(csv.DictReader(f))


def write_json(path: Path, payload: Any) -> Path:
    path = _prepare(path)
    try:
        if isinstance(payload, BaseModel):
            text = payload.model_dump_json(indent=2)
        else:
            text = json.dumps(payload, indent=2, default=_json_default)
        path.write_text(text)
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}") from e
    logger.info("Wrote %s", path)
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    raise TypeError(f"cannot serialize {type(value).__name__}")


def sidecar_path(output: Path) -> Path:
    """``<out>.json`` next to an output file."""
    output = Path(output)
    return output.with_name(output.name + ".json")


def write_record(record: ExperimentRecord, output: Path) -> Path:
    return write_json(sidecar_path(output), record)


# --- Audio ---

def write_wav(signal: Signal, path: Path, fmt: str = "pcm16") -> Path:
    """
    Write a mono WAV at the signal's sample rate

    Samples are clipped to [-1, 1]; ``pcm16`` scales by 32767.
    """
    if fmt not in WAV_FORMATS:
        raise ExportError(f"unknown WAV format {fmt!r}; expected one of {WAV_FORMATS}")
    path = _prepare(path)
    samples = np.clip(signal.values, -1.0, 1.0)
    if fmt == "pcm16":
        data = np.round(samples * 32767).astype(np.int16)
    else:
        data = samples.astype(np.float32)
    try:
        wavfile.write(str(path), int(signal.sample_rate), data)
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}") from e
    logger.info("Wrote %s (%d samples, %s)", path, data.size, fmt)
    return path


# --- Filters and coefficients ---

def write_filter_responses(bank: WaveletBank, path: Path) -> Path:
    """One row per frequency bin of the non-negative half: frequency, then one gain column per filter."""
    freqs = bank.frequencies
    keep = freqs >= 0
    header = ["frequency"] + [f"psi_{c:.6g}" for c in bank.center_freqs]
    rows = (
        [freqs[i]] + list(bank.fourier_filters[:, i])
        for i in np.flatnonzero(keep)
    )
    return write_csv(path, header, rows)


COEFF_HEADER = ["order", "lambda_hz", "alpha_hz", "beta_cpo", "spin", "frame", "value"]


def coefficient_rows(coeffs: JtfsCoeffs) -> Iterable[list]:
    """Rows in flattening order (s1 then s2, path-major, time-minor)."""
    for block, paths in ((coeffs.s1, coeffs.s1_paths), (coeffs.s2, coeffs.s2_paths)):
        values = block.value
        for p, info in enumerate(paths):
            for l, lam in enumerate(coeffs.lambda_axis):
                for t in range(values.shape[-1]):
                    yield [info.order, lam, info.alpha, info.beta, info.spin, t, values[p, l, t]]


def write_coefficients_csv(coeffs: JtfsCoeffs, path: Path) -> Path:
    return write_csv(path, COEFF_HEADER, coefficient_rows(coeffs))


def write_coefficients_json(coeffs: JtfsCoeffs, path: Path, config: Optional[dict] = None) -> Path:
    payload = {
        "config": config if config is not None else coeffs.config.model_dump(),
        "lambda_hz": coeffs.lambda_axis,
        "frame_rate": coeffs.frame_rate,
        "s1_paths": [p.model_dump() for p in coeffs.s1_paths],
        "s2_paths": [p.model_dump() for p in coeffs.s2_paths],
        "s1": coeffs.s1.value,
        "s2": coeffs.s2.value,
    }
    return write_json(path, payload)


# --- Trajectories ---

TRAJECTORY_HEADER = [
    "iteration", "f_m", "gamma", "loss", "proposed_loss", "grad_f_m", "grad_gamma",
    "lr_f_m", "lr_gamma", "distance", "accepted", "clamped",
]


def write_trajectory_csv(trajectory: Trajectory, path: Path) -> Path:
    rows = ([getattr(r, name) for name in TRAJECTORY_HEADER] for r in trajectory.records)
    return write_csv(path, TRAJECTORY_HEADER, rows)


def write_trajectory_json(trajectory: Trajectory, path: Path) -> Path:
    return write_json(path, trajectory)
