"""Fourier-domain analytic wavelet filterbanks, Gaussian lowpass filters and FFT convolution."""
import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from app.schemas.error import ConfigurationError
from app.utils import dual
from app.utils.dual import Dual, DualComplex

logger = logging.getLogger(__name__)

Axis = Literal["time", "log-frequency"]


@dataclass(frozen=True, eq=False)
class WaveletBank:
    """
    Morlet filters sampled on an FFT grid

    Attributes:
        center_freqs: centre frequencies in ascending order (Hz for time
            axes, cycles per octave for the log-frequency axis)
        fourier_filters: real gains, shape (n_filters, length)
        sigmas: Gaussian widths of each filter, same unit as center_freqs
        quality: filters per octave
        axis: which axis the bank operates on
        rate: sampling rate of that axis (Hz, or bins per octave)
    """
    center_freqs: np.ndarray
    fourier_filters: np.ndarray
    sigmas: np.ndarray
    quality: int
    axis: Axis
    rate: float

    @property
    def length(self) -> int:
        return self.fourier_filters.shape[-1]

    def __len__(self) -> int:
        return len(self.center_freqs)

    @property
    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.length, d=1.0 / self.rate)

    def mirrored(self) -> np.ndarray:
        """Filters reflected to negative frequencies (index k -> -k mod N)."""
        return np.roll(self.fourier_filters[:, ::-1], 1, axis=-1)

    def time_support(self) -> int:
        """Rough time-domain support (4 standard deviations) of the widest filter, in samples."""
        return support_from_sigma(float(np.min(self.sigmas)), self.rate)


@dataclass(frozen=True, eq=False)
class LowpassFilter:
    width: float
    fourier_gain: np.ndarray = field(repr=False)

    @property
    def length(self) -> int:
        return self.fourier_gain.shape[-1]


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def padded_length(n: int, support: int) -> int:
    """Zero-padded FFT length: next power of two >= n + support (support capped at n)."""
    return next_pow2(n + min(max(support, 0), n))


def morlet_sigmas(centers: np.ndarray, quality: int) -> np.ndarray:
    """Gaussian widths giving a half-power crossing between neighbours at ratio 2^(1/quality)."""
    half_gap = np.asarray(centers) * (2.0 ** (0.5 / quality) - 2.0 ** (-0.5 / quality)) / 2.0
    return half_gap / math.sqrt(math.log(2.0))


def support_from_sigma(sigma: float, rate: float) -> int:
    """Four time-domain standard deviations, in samples, of a Gaussian of frequency width ``sigma``."""
    return int(math.ceil(4.0 * rate / (2.0 * math.pi * sigma)))


def geometric_centers(top: float, quality: int, octaves: int) -> np.ndarray:
    """``quality * octaves`` centres descending from ``top`` by 2^(1/quality), returned ascending."""
    count = quality * octaves
    if count < 1:
        raise ConfigurationError(f"J*Q must be at least 1, got J={octaves}, Q={quality}")
    return (top * 2.0 ** (-np.arange(count) / quality))[::-1]


def morlet_bank(
    centers: Sequence[float],
    quality: int,
    length: int,
    rate: float,
    axis: Axis = "time",
) -> WaveletBank:
    """
    Build analytic Morlet filters at the given centre frequencies

    Each filter is a Gaussian bump minus a Gaussian at DC scaled so the DC gain
    is exactly zero; negative frequencies are set to zero. Widths are chosen so
    neighbours at ratio 2^(1/Q) cross at half power, and the bank is scaled so
    the Littlewood-Paley sum peaks at 1 over the covered band.

    Args:
        centers: centre frequencies (any order)
        quality: filters per octave
        length: FFT length
        rate: sampling rate of the axis
        axis: "time" or "log-frequency"

    Returns:
        WaveletBank: filters sorted by ascending centre frequency

    Raises:
        ConfigurationError: if a centre frequency reaches the Nyquist rate
    """
    centers = np.sort(np.asarray(centers, dtype=np.float64))
    nyquist = rate / 2.0
    if centers.size == 0:
        raise ConfigurationError("filterbank needs at least one centre frequency")
    if centers[-1] >= nyquist or centers[0] <= 0:
        raise ConfigurationError(
            f"centre frequencies must lie in (0, {nyquist}), got [{centers[0]}, {centers[-1]}]"
        )

    freqs = np.fft.fftfreq(length, d=1.0 / rate)
    sigmas = morlet_sigmas(centers, quality)

    f = freqs[None, :]
    xi = centers[:, None]
    sig = sigmas[:, None]
    bump = np.exp(-((f - xi) ** 2) / (2.0 * sig ** 2))
    correction = np.exp(-(xi ** 2) / (2.0 * sig ** 2)) * np.exp(-(f ** 2) / (2.0 * sig ** 2))
    filters = bump - correction
    filters[:, freqs <= 0] = 0.0

    lp = np.sum(filters ** 2, axis=0)
    band = (freqs >= centers[0]) & (freqs <= centers[-1])
    peak = float(np.max(lp[band])) if np.any(band) else float(np.max(lp))
    filters /= math.sqrt(peak)

    logger.debug("Built %d %s filters over %d bins (rate %.4g)", centers.size, axis, length, rate)
    return WaveletBank(
        center_freqs=centers,
        fourier_filters=filters,
        sigmas=sigmas,
        quality=quality,
        axis=axis,
        rate=float(rate),
    )


def build_temporal_bank(
    Q: int,
    J: int,
    N: int,
    sample_rate: float,
    top_freq: Optional[float] = None,
) -> WaveletBank:
    """J*Q wavelets spanning J octaves down from ``top_freq`` (default sample_rate * 2^(-1/Q) / 2)."""
    if top_freq is None:
        top_freq = sample_rate * 2.0 ** (-1.0 / Q) / 2.0
    if top_freq >= sample_rate / 2.0:
        raise ConfigurationError(
            f"top centre frequency {top_freq} Hz is not below Nyquist ({sample_rate / 2.0} Hz)"
        )
    return morlet_bank(geometric_centers(top_freq, Q, J), Q, N, sample_rate, axis="time")


def build_frequential_bank(Q_fr: int, J_fr: int, M: int, bins_per_octave: int = 8) -> WaveletBank:
    """
    Wavelets along the log-frequency axis of a scalogram with ``M`` bins

    The axis is sampled at ``bins_per_octave`` bins per octave, so centre
    frequencies are in cycles per octave and stay below bins_per_octave / 2.
    The FFT length is the reflection-padded length ``next_pow2(2 * M)``.
    """
    length = next_pow2(2 * M)
    top = bins_per_octave * 2.0 ** (-1.0 / Q_fr) / 2.0
    return morlet_bank(geometric_centers(top, Q_fr, J_fr), Q_fr, length, bins_per_octave,
                       axis="log-frequency")


def build_lowpass(width: float, N: int) -> LowpassFilter:
    """Gaussian lowpass with time standard deviation width / 2 samples and unit DC gain."""
    if width < 1:
        raise ConfigurationError(f"lowpass width must be at least 1, got {width}")
    freqs = np.fft.fftfreq(N)
    sigma_t = width / 2.0
    gain = np.exp(-((2.0 * math.pi * sigma_t * freqs) ** 2) / 2.0)
    return LowpassFilter(width=float(width), fourier_gain=gain)


def littlewood_paley(bank: WaveletBank) -> np.ndarray:
    return np.sum(np.abs(bank.fourier_filters) ** 2, axis=0)


def covered_band(bank: WaveletBank) -> np.ndarray:
    freqs = bank.frequencies
    return (freqs >= bank.center_freqs[0]) & (freqs <= bank.center_freqs[-1])


def along_axis(multiplier: np.ndarray, axis: int) -> np.ndarray:
    """Reshape a 1-d multiplier so it broadcasts along ``axis`` (negative)."""
    if multiplier.ndim != 1 or axis == -1:
        return multiplier
    return multiplier.reshape(multiplier.shape + (1,) * (-axis - 1))


def fft_convolve(x: Dual, multiplier: np.ndarray, axis: int = -1) -> DualComplex:
    """
    Circular convolution of a dual sequence with a Fourier multiplier

    ``x`` must already be zero-padded to the multiplier's length along ``axis``.
    Primal and tangents go through the same transforms.

    Raises:
        ConfigurationError: if lengths differ
    """
    multiplier = np.asarray(multiplier)
    if axis >= 0:
        axis -= x.ndim
    if x.shape[axis] != multiplier.shape[-1]:
        raise ConfigurationError(
            f"signal length {x.shape[axis]} does not match filter length {multiplier.shape[-1]}"
        )
    spectrum = dual.fft(x, axis=axis)
    return dual.ifft(spectrum * along_axis(multiplier, axis), axis=axis)


def lowpass_decimate(x: Dual, lowpass: LowpassFilter, stride: int, axis: int = -1) -> Dual:
    """
    Gaussian lowpass along ``axis`` followed by subsampling by ``stride``

    Subsampling is done in the Fourier domain by folding the spectrum, which
    equals keeping every ``stride``-th sample of the filtered sequence.
    """
    if axis >= 0:
        axis -= x.ndim
    length = x.shape[axis]
    if length != lowpass.length:
        raise ConfigurationError(
            f"signal length {length} does not match lowpass length {lowpass.length}"
        )
    if length % stride:
        raise ConfigurationError(f"stride {stride} does not divide length {length}")
    spectrum = dual.fft(x, axis=axis) * along_axis(lowpass.fourier_gain, axis)
    folded = fold_spectrum(spectrum, stride, axis)
    return dual.ifft(folded, axis=axis).re


def fold_spectrum(spectrum: Dual, stride: int, axis: int = -1) -> Dual:
    """Periodize a length-N spectrum to length N / stride (time-domain subsampling)."""
    if stride == 1:
        return spectrum
    if axis >= 0:
        axis -= spectrum.ndim

    def fold(a: np.ndarray) -> np.ndarray:
        moved = np.moveaxis(a, axis, -1)
        n = moved.shape[-1]
        folded = moved.reshape(moved.shape[:-1] + (stride, n // stride)).mean(axis=-2)
        return np.moveaxis(folded, -1, axis)

    return spectrum.apply_linear(fold)


def frequential_operators(multipliers: np.ndarray, size: int) -> np.ndarray:
    """
    Dense matrices of reflection-padded circular filtering along an axis of ``size`` bins

    Row ``i`` of operator ``k`` is the response at bin ``i`` to a unit impulse
    at every input bin, i.e. ``ops[k] @ v`` equals padding ``v`` by reflection
    to the multiplier length, filtering with ``multipliers[k]`` in the Fourier
    domain and cropping back to ``size`` bins.

    Returns:
        np.ndarray: complex, shape (n_multipliers, size, size)
    """
    multipliers = np.atleast_2d(np.asarray(multipliers))
    length = multipliers.shape[-1]
    if length < size:
        raise ConfigurationError(f"filter length {length} is shorter than the axis ({size} bins)")
    left = (length - size) // 2
    right = length - size - left
    basis = np.pad(np.eye(size), ((left, right), (0, 0)), mode="reflect")
    responses = np.fft.ifft(np.fft.fft(basis, axis=0)[None] * multipliers[:, :, None], axis=-2)
    return responses[:, left:left + size, :]


def averaging_matrix(lowpass: LowpassFilter, stride: int, frames: np.ndarray, n_out: int) -> np.ndarray:
    """
    Restriction of ``lowpass_decimate`` to the input ``frames`` and the first ``n_out`` outputs

    ``v[..., frames] @ A`` matches ``lowpass_decimate(v, lowpass, stride)[..., :n_out]``
    whenever ``v`` vanishes outside ``frames``.
    """
    length = lowpass.length
    kernel = np.fft.ifft(lowpass.fourier_gain).real
    centres = stride * np.arange(n_out)
    return kernel[(centres[None, :] - np.asarray(frames)[:, None]) % length]


def kept_frames(total: int, signal: int, margin: int) -> np.ndarray:
    """Indices of a circular buffer covering ``signal`` frames from 0 plus ``margin`` frames on both sides."""
    if signal + 2 * margin >= total:
        return np.arange(total)
    return np.concatenate([np.arange(signal + margin), np.arange(total - margin, total)])
