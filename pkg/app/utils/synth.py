"""Differentiable chirplet arpeggiator.

A signal is rendered from theta = (f_m, gamma): a train of half-sine windowed
exponential chirps, one every 1/f_m seconds, each starting 2^(gamma/f_m)
higher than the previous one, under a Gaussian envelope whose width scales
with 1/gamma. Time t = 0 sits at the centre of the buffer.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from app.schemas.error import DegenerateSignalError, NumericDomainError, ShiftRangeError
from app.schemas.synth import SynthConfig, ThetaPoint
from app.utils import dual
from app.utils.dual import Dual

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
TWO_PI = 2.0 * math.pi

# envelope weight at |gamma t| = w / 2, i.e. the edge of the window event_count covers
NU_FLOOR = math.exp(-1.0 / 8.0)
# events outside the default range weigh less than this under the envelope
ENVELOPE_CUTOFF = 1e-4
# |gamma t| / w at which the envelope falls to ENVELOPE_CUTOFF
EVENT_REACH = math.sqrt(2.0 * math.log(1.0 / ENVELOPE_CUTOFF))

DualTheta = Tuple[Dual, Dual]
ThetaLike = Union[ThetaPoint, DualTheta]


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled waveform; samples may carry tangents."""
    samples: Dual
    sample_rate: float

    def __len__(self) -> int:
        return self.samples.shape[-1]

    @property
    def num_samples(self) -> int:
        return len(self)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.samples.value)

    def with_samples(self, samples: Dual) -> "Signal":
        return Signal(samples=samples, sample_rate=self.sample_rate)


def lift_theta(theta: ThetaPoint, differentiate: bool = True) -> DualTheta:
    """Seed (f_m, gamma) as dual scalars; constants when ``differentiate`` is False."""
    if differentiate:
        return dual.lift(theta.f_m, 0), dual.lift(theta.gamma, 1)
    return dual.lift(theta.f_m), dual.lift(theta.gamma)


def _as_dual_theta(theta: ThetaLike) -> DualTheta:
    if isinstance(theta, ThetaPoint):
        return lift_theta(theta, differentiate=False)
    f_m, gamma = theta
    return dual.as_dual(f_m), dual.as_dual(gamma)


def time_axis(cfg: SynthConfig) -> np.ndarray:
    """Sample times in seconds, with t = 0 at index num_samples // 2."""
    n = cfg.num_samples
    return (np.arange(n) - n // 2) / cfg.sample_rate


def event_count(theta: ThetaPoint, w: float) -> float:
    """Number of events with non-negligible energy, f_m * w / gamma."""
    return theta.f_m * w / theta.gamma


def default_event_range(theta: ThetaPoint, cfg: SynthConfig) -> int:
    """Smallest n_max whose event n_max sits where the envelope is below ENVELOPE_CUTOFF."""
    if cfg.event_range is not None:
        return cfg.event_range
    return int(math.floor(EVENT_REACH * event_count(theta, cfg.w))) + 1


def chirplet_phase(t, f_c: float, gamma) -> Dual:
    """
    Exponential chirp phase in cycles, f_c / (gamma ln 2) * 2^(gamma t)

    Its time derivative is the instantaneous frequency f_c * 2^(gamma t).

    Raises:
        NumericDomainError: if gamma is not positive
    """
    gamma = dual.as_dual(gamma)
    if np.any(gamma.value <= 0):
        raise NumericDomainError(
            "chirplet_phase", f"chirp rate must be positive, got {np.min(gamma.value)}"
        )
    t = dual.as_dual(t)
    return f_c / (gamma * LN2) * dual.pow2(gamma * t)


def chirplet_amp(t, f_m) -> Dual:
    """Half-sine window sin(2 pi f_m t) on 0 <= f_m t < 1/2, zero elsewhere."""
    arg = dual.as_dual(f_m) * t
    inside = (arg.value >= 0) & (arg.value < 0.5)
    return dual.where(inside, dual.sin(TWO_PI * arg), 0.0)


def instantaneous_frequency(t, k: int, theta: ThetaPoint, cfg: SynthConfig) -> np.ndarray:
    """Instantaneous frequency in Hz of event ``k`` at absolute time ``t`` (seconds)."""
    u = np.asarray(t, dtype=np.float64) - k / theta.f_m
    return cfg.f_c * 2.0 ** (theta.gamma * k / theta.f_m) * 2.0 ** (theta.gamma * u)


def event_onsets(theta: ThetaPoint, cfg: SynthConfig, floor: float = NU_FLOOR) -> np.ndarray:
    """Onset times (s) of events whose envelope weight is at least ``floor`` and that start inside the buffer."""
    n_max = default_event_range(theta, cfg)
    k = np.arange(-n_max, n_max + 1)
    onsets = k / theta.f_m
    weight = np.exp(-((theta.gamma * onsets) ** 2) / (2.0 * cfg.w ** 2))
    t = time_axis(cfg)
    keep = (weight >= floor) & (onsets >= t[0]) & (onsets <= t[-1])
    return onsets[keep]


def _peak_phase(c: float) -> float:
    """Root of s tan s = c on (0, pi / 2)."""
    return brentq(lambda s: s * math.sin(s) - c * math.cos(s), 0.0, math.pi / 2.0, xtol=1e-15)


def envelope_peak(theta: ThetaLike, w: float) -> Dual:
    """
    Maximum over t of the amplitude envelope phi_w(gamma t) * a(t - n / f_m) / gamma

    The maximum lies in the event starting at t = 0. With s = 2 pi f_m t
    the envelope there is exp(-s^2 / (2 c)) sin(s) / gamma, c = (2 pi nu)^2,
    maximal where s tan s = c. The root is found on primal values; at a
    maximum its own sensitivity drops out, so tangents flow through c and
    gamma only.
    """
    f_m, gamma = _as_dual_theta(theta)
    c = dual.square(TWO_PI * w * f_m / gamma)
    s = _peak_phase(float(c.value))
    return dual.exp((-s * s) / (2.0 * c)) * (math.sin(s) / gamma)


def arpeggio(theta: ThetaLike, cfg: SynthConfig) -> Signal:
    """
    Render the unnormalized arpeggio for theta

    For every sample at most one event is active, the one with index
    k = floor(f_m t), so the event sum is evaluated in a single pass. Event
    indices come from primal values; tangents flow through the local time
    u = t - k / f_m, the envelope and the chirp phase.

    Args:
        theta: ThetaPoint, or a pair of dual scalars (f_m, gamma)
        cfg: synthesizer settings

    Returns:
        Signal: samples as duals (constant tangents for a plain ThetaPoint)
    """
    f_m, gamma = _as_dual_theta(theta)
    primal = ThetaPoint(f_m=float(f_m.value), gamma=float(gamma.value))
    n_max = default_event_range(primal, cfg)

    t = time_axis(cfg)
    k = np.floor(primal.f_m * t)
    active = np.abs(k) <= n_max

    u = t - k / f_m
    amplitude = chirplet_amp(u, f_m)
    transposition = dual.pow2(gamma * k / f_m)
    carrier = dual.cos(TWO_PI * transposition * chirplet_phase(u, cfg.f_c, gamma))
    envelope = dual.exp(-dual.square(gamma * t) / (2.0 * cfg.w ** 2))

    x = dual.where(active, envelope * amplitude * carrier / gamma, 0.0)
    if not np.all(np.isfinite(x.value)) or not np.all(np.isfinite(x.tangent)):
        raise NumericDomainError("arpeggio", f"non-finite samples for theta={primal}")
    return Signal(samples=x, sample_rate=cfg.sample_rate)


def glissando(gamma, cfg: SynthConfig, delay: float = 0.0) -> Signal:
    """A single continuous exponential chirp under the arpeggio's envelope, delayed by ``delay`` seconds."""
    gamma = dual.as_dual(gamma)
    u = time_axis(cfg) - delay
    envelope = dual.exp(-dual.square(gamma * u) / (2.0 * cfg.w ** 2))
    carrier = dual.cos(TWO_PI * chirplet_phase(u, cfg.f_c, gamma))
    return Signal(samples=envelope * carrier / gamma, sample_rate=cfg.sample_rate)


def normalize(x: Signal, mode: str = "peak", peak: Optional[Dual] = None) -> Signal:
    """
    Rescale to unit peak (``"peak"``) or unit L2 norm (``"energy"``)

    With ``peak`` given, e.g. an ``envelope_peak``, the signal is divided by
    it; otherwise by its largest absolute sample, whose tangent is that of
    the selected sample alone.

    Raises:
        DegenerateSignalError: if every sample is zero
    """
    if not np.any(x.samples.value):
        raise DegenerateSignalError("cannot normalize an all-zero signal")
    if mode == "peak":
        scale = peak if peak is not None else dual.peak_abs(x.samples)
    elif mode == "energy":
        scale = dual.sqrt(dual.square(x.samples).sum())
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    return x.with_samples(x.samples / scale)


def _delay(a: np.ndarray, tau: int) -> np.ndarray:
    out = np.zeros_like(a)
    if tau > 0:
        out[..., tau:] = a[..., :-tau]
    elif tau < 0:
        out[..., :tau] = a[..., -tau:]
    else:
        out[...] = a
    return out


def time_shift(x: Signal, tau: int) -> Signal:
    """
    Delay by ``tau`` samples with zero fill (negative tau advances)

    Raises:
        ShiftRangeError: if |tau| >= signal length
    """
    tau = int(tau)
    if abs(tau) >= len(x):
        raise ShiftRangeError(f"|tau|={abs(tau)} must be below the signal length {len(x)}")
    return x.with_samples(x.samples.apply_linear(lambda a: _delay(a, tau)))


def synthesize(
    theta: ThetaPoint,
    cfg: SynthConfig,
    tau: int = 0,
    differentiate: bool = False,
) -> Signal:
    """
    Arpeggio for ``theta``, normalized per ``cfg.normalization`` and delayed by ``tau`` samples

    Peak normalization divides by the envelope maximum, so the largest
    sample is at most 1 and depends smoothly on theta.
    """
    seeded = lift_theta(theta, differentiate)
    x = arpeggio(seeded, cfg)
    x = normalize(x, cfg.normalization, peak=envelope_peak(seeded, cfg.w))
    return time_shift(x, tau) if tau else x
