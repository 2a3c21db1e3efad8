"""Spectral losses between a target and a predicted arpeggio, and the parameter-space metric."""
import logging
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy.signal import get_window

from app.schemas.loss import LossKind, LossValue, MssConfig, PipelineConfig
from app.schemas.synth import ThetaPoint
from app.utils import dual
from app.utils.dual import Dual
from app.utils.scattering import jtfs
from app.utils.synth import Signal, synthesize

logger = logging.getLogger(__name__)


def param_distance(theta_a: ThetaPoint, theta_b: ThetaPoint) -> float:
    """Squared Euclidean distance in (Hz, octaves per second)."""
    return float(np.sum((theta_a.as_array() - theta_b.as_array()) ** 2))


def _to_loss_value(loss: Dual) -> LossValue:
    gradient = loss.gradient
    return LossValue(value=max(float(loss.value), 0.0), gradient=(float(gradient[0]), float(gradient[1])))


# --- JTFS ---

@lru_cache(maxsize=16)
def _jtfs_target(theta: ThetaPoint, tau: int, cfg: PipelineConfig) -> np.ndarray:
    x = synthesize(theta, cfg.synth, tau=tau)
    return jtfs(x, cfg.scattering).flatten().value


def jtfs_loss(
    theta_target: ThetaPoint,
    theta_pred: ThetaPoint,
    tau_target: int,
    tau_pred: int,
    cfg: PipelineConfig,
) -> LossValue:
    """
    Squared L2 distance between flattened JTFS coefficients

    The target representation carries no tangents and is computed once per
    (theta, tau, config). The gradient is the residual contracted with the
    coefficient tangents.
    """
    target = _jtfs_target(theta_target, int(tau_target), cfg)
    x = synthesize(theta_pred, cfg.synth, tau=int(tau_pred), differentiate=True)
    residual = jtfs(x, cfg.scattering).flatten() - target
    return _to_loss_value(dual.square(residual).sum())


# --- MSS ---

def stft_magnitude(x: Dual, window_size: int, hop: int, window: str = "hann") -> Dual:
    """
    One-sided STFT magnitude with centred frames, shape (n_frames, window_size // 2 + 1)

    The signal is zero-padded by window_size // 2 on both sides; frame k is
    centred on sample k * hop.
    """
    half = window_size // 2
    length = x.shape[-1] + 2 * half
    n_frames = 1 + (length - window_size) // hop
    index = hop * np.arange(n_frames)[:, None] + np.arange(window_size)[None, :]
    taper = get_window(window, window_size, fftbins=True)

    def frame(a: np.ndarray) -> np.ndarray:
        widths = [(0, 0)] * (a.ndim - 1) + [(half, half)]
        return np.pad(a, widths)[..., index]

    frames = x.apply_linear(frame) * taper
    return dual.rfft(frames, axis=-1).modulus()


@lru_cache(maxsize=16)
def _mss_target(theta: ThetaPoint, tau: int, cfg: PipelineConfig) -> Tuple[np.ndarray, ...]:
    x = synthesize(theta, cfg.synth, tau=tau)
    return tuple(s.value for s in _spectrograms(x.samples, cfg.mss))


def _spectrograms(x: Dual, cfg: MssConfig) -> List[Dual]:
    return [stft_magnitude(x, n, n // cfg.hop_divisor, cfg.window) for n in cfg.window_sizes]


def mss_loss(
    theta_target: ThetaPoint,
    theta_pred: ThetaPoint,
    tau_target: int,
    tau_pred: int,
    cfg: PipelineConfig,
) -> LossValue:
    """
    Mean over resolutions of the mean absolute difference between magnitude spectrograms

    The derivative of |u| at u = 0 is taken as 0.
    """
    targets = _mss_target(theta_target, int(tau_target), cfg)
    x = synthesize(theta_pred, cfg.synth, tau=int(tau_pred), differentiate=True)
    terms = [abs(pred - target).mean() for pred, target in zip(_spectrograms(x.samples, cfg.mss), targets)]
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return _to_loss_value(total / len(terms))


def evaluate_loss(
    kind: LossKind,
    theta_target: ThetaPoint,
    theta_pred: ThetaPoint,
    tau_target: int,
    tau_pred: int,
    cfg: PipelineConfig,
) -> LossValue:
    if LossKind(kind) is LossKind.JTFS:
        return jtfs_loss(theta_target, theta_pred, tau_target, tau_pred, cfg)
    return mss_loss(theta_target, theta_pred, tau_target, tau_pred, cfg)


def clear_target_cache() -> None:
    _jtfs_target.cache_clear()
    _mss_target.cache_clear()


# --- Distances between rendered signals ---

def jtfs_distance(x: Signal, y: Signal, cfg: PipelineConfig) -> float:
    """Squared L2 distance between the JTFS coefficients of two signals (primal values only)."""
    a = jtfs(x, cfg.scattering).flatten().value
    b = jtfs(y, cfg.scattering).flatten().value
    return float(np.sum((a - b) ** 2))


def mss_distance(x: Signal, y: Signal, cfg: PipelineConfig) -> float:
    terms = [
        float(np.mean(np.abs(a.value - b.value)))
        for a, b in zip(_spectrograms(x.samples, cfg.mss), _spectrograms(y.samples, cfg.mss))
    ]
    return float(np.mean(terms))
