"""Wavelet scalogram and joint time-frequency scattering.

Pipeline for a signal x:

    U1 = |x * psi_lambda|                      (decimated to stride u1_stride)
    U2 = |U1 * psi_alpha * psi_beta^spin|      (along time, then along log lambda)
    S1 = |U1 * phi_T * psi_beta|  and  U1 * phi_T (* phi_F)
    S2 = U2 * phi_T (* phi_F)     and  |U1 * psi_alpha (* phi_F)| * phi_T

All stages act on duals, so tangents reach every coefficient. Filters,
strides and path layout live in a ``JtfsPlan`` built once per
(config, length, sample rate). Filtering along log lambda and averaging
along time are dense matrix products: the lambda axis is short, only the
frames around the signal carry energy, and the output has a handful of
frames per path.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np

from app.schemas.error import ConfigurationError
from app.schemas.scattering import PathInfo, ScatteringConfig
from app.utils import dual
from app.utils.dual import Dual
from app.utils.filterbank import (
    LowpassFilter,
    WaveletBank,
    averaging_matrix,
    build_frequential_bank,
    build_lowpass,
    fold_spectrum,
    frequential_operators,
    geometric_centers,
    kept_frames,
    lowpass_decimate,
    morlet_bank,
    morlet_sigmas,
    padded_length,
    support_from_sigma,
)
from app.utils.synth import Signal

logger = logging.getLogger(__name__)

# complex samples per block of second-order moduli
_BLOCK_BUDGET = 1 << 20
_LAMBDA_BUDGET = 1 << 21
# filter supports are four standard deviations; crops keep six
_MARGIN_FACTOR = 1.5


# --- Plan ---

@dataclass(frozen=True, eq=False)
class JtfsLayout:
    """Centre frequencies, strides and shapes; cheap to compute, no filters."""
    lambdas: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    alpha_strides: Tuple[int, ...]
    u1_stride: int
    final_stride: int
    padded_length: int
    n_frames: int
    lambda_stride: int

    @property
    def n_lambdas_out(self) -> int:
        return math.ceil(len(self.lambdas) / self.lambda_stride)

    @property
    def n_s1_paths(self) -> int:
        return 1 + len(self.betas)

    @property
    def n_s2_paths(self) -> int:
        return len(self.alphas) * (1 + 2 * len(self.betas))

    @property
    def coefficient_count(self) -> int:
        return (self.n_s1_paths + self.n_s2_paths) * self.n_lambdas_out * self.n_frames


def _stride_for(rate: float, sample_rate: float, cap: int, oversampling: float = 4.0) -> int:
    """Largest power of two s <= cap with sample_rate / s >= oversampling * rate."""
    ratio = sample_rate / (oversampling * rate)
    if ratio < 1:
        return 1
    return max(1, min(cap, 1 << int(math.floor(math.log2(ratio)))))


def plan_layout(cfg: ScatteringConfig, num_samples: int, sample_rate: float) -> JtfsLayout:
    """
    Work out the path layout of the transform

    U1 runs at four times the largest retained alpha. Each second-order
    path is then decimated to twice its own alpha: the moduli that follow
    do not depend on where the band sits, only on its width.

    Raises:
        ConfigurationError: if no second-order rate survives pruning or the
            output stride exceeds the padded length
    """
    lambdas = geometric_centers(sample_rate * 2.0 ** (-1.0 / cfg.Q1) / 2.0, cfg.Q1, cfg.J)
    sigma_min = float(morlet_sigmas(lambdas[:1], cfg.Q1)[0])
    length = padded_length(num_samples, support_from_sigma(sigma_min, sample_rate))

    final_stride = cfg.final_stride
    if final_stride > length:
        raise ConfigurationError(
            f"output stride {final_stride} exceeds the padded transform length {length}"
        )

    alphas = geometric_centers(sample_rate * 2.0 ** (-1.0 / cfg.Q2) / 2.0, cfg.Q2, cfg.J)
    if cfg.prune:
        alphas = alphas[alphas < lambdas[-1] / cfg.Q1]
    if alphas.size == 0:
        raise ConfigurationError("no second-order rate lies below the first-order bandwidth")

    u1_stride = _stride_for(float(alphas[-1]), sample_rate, final_stride)
    alpha_strides = tuple(
        max(u1_stride, _stride_for(float(a), sample_rate, final_stride, oversampling=2.0)) for a in alphas
    )

    betas = geometric_centers(cfg.Q1 * 2.0 ** (-1.0 / cfg.Q_fr) / 2.0, cfg.Q_fr, cfg.J_fr)
    lambda_stride = max(1, cfg.F >> cfg.oversampling) if cfg.F > 0 else 1

    return JtfsLayout(
        lambdas=lambdas,
        alphas=alphas,
        betas=betas,
        alpha_strides=alpha_strides,
        u1_stride=u1_stride,
        final_stride=final_stride,
        padded_length=length,
        n_frames=math.ceil(num_samples / final_stride),
        lambda_stride=lambda_stride,
    )


@dataclass(frozen=True, eq=False)
class JtfsPlan:
    """
    Filters, operators and crops for one configuration

    Attributes:
        alpha_rows: lambda rows kept by pruning, per alpha
        alpha_frames: frames of each alpha path that can carry energy
        alpha_averaging: phi_T plus decimation as a (kept frames, n_frames) matrix, per alpha
        u1_averaging: the same map for U1 over all of its frames
        second_order_ops: (1 + 2 n_betas, M, M) lambda operators; the beta = 0
            branch (phi_F or identity) first, then spin +1 and -1 per beta
        first_order_ops: (n_betas, M, M) analytic beta operators
        lowpass_op: real (M, M) phi_F operator, None when F = 0
    """
    cfg: ScatteringConfig
    num_samples: int
    sample_rate: float
    layout: JtfsLayout
    lambda_bank: WaveletBank
    alpha_bank: WaveletBank
    beta_bank: WaveletBank
    u1_lowpass: Optional[LowpassFilter]
    row_masks: np.ndarray
    alpha_rows: Tuple[np.ndarray, ...]
    alpha_frames: Tuple[np.ndarray, ...]
    alpha_averaging: Tuple[np.ndarray, ...]
    u1_averaging: np.ndarray
    second_order_ops: np.ndarray
    first_order_ops: np.ndarray
    lowpass_op: Optional[np.ndarray]

    @property
    def freq_length(self) -> int:
        return self.beta_bank.length


def _alpha_margin(lambda_bank: WaveletBank, alpha_bank: WaveletBank, rows: np.ndarray, i: int, u1_stride: int) -> int:
    """Samples past either end of the signal where path ``i`` still carries energy."""
    rate = lambda_bank.rate
    support = (
        support_from_sigma(float(np.min(lambda_bank.sigmas[rows])), rate)
        + support_from_sigma(float(alpha_bank.sigmas[i]), rate)
        + 2 * u1_stride
    )
    return int(math.ceil(_MARGIN_FACTOR * support))


@lru_cache(maxsize=8)
def build_plan(cfg: ScatteringConfig, num_samples: int, sample_rate: float) -> JtfsPlan:
    """Build (and memoise) the filters and strides for one configuration and signal length."""
    layout = plan_layout(cfg, num_samples, sample_rate)
    length = layout.padded_length
    s_u = layout.u1_stride
    n_lambdas = len(layout.lambdas)

    lambda_bank = morlet_bank(layout.lambdas, cfg.Q1, length, sample_rate, axis="time")
    alpha_bank = morlet_bank(layout.alphas, cfg.Q2, length // s_u, sample_rate / s_u, axis="time")
    beta_bank = build_frequential_bank(cfg.Q_fr, cfg.J_fr, n_lambdas, bins_per_octave=cfg.Q1)
    phi_f = build_lowpass(cfg.F, beta_bank.length) if cfg.F > 0 else None

    if cfg.prune:
        row_masks = layout.alphas[:, None] < layout.lambdas[None, :] / cfg.Q1
    else:
        row_masks = np.ones((len(layout.alphas), n_lambdas), dtype=bool)
    alpha_rows = tuple(np.flatnonzero(mask) for mask in row_masks)

    alpha_frames = []
    alpha_averaging = []
    for i, stride in enumerate(layout.alpha_strides):
        margin = _alpha_margin(lambda_bank, alpha_bank, alpha_rows[i], i, s_u)
        frames = kept_frames(length // stride, math.ceil(num_samples / stride), math.ceil(margin / stride))
        phi_t = build_lowpass(cfg.T / stride, length // stride)
        alpha_frames.append(frames)
        alpha_averaging.append(averaging_matrix(phi_t, layout.final_stride // stride, frames, layout.n_frames))

    u1_frames = np.arange(length // s_u)
    u1_averaging = averaging_matrix(
        build_lowpass(cfg.T / s_u, length // s_u), layout.final_stride // s_u, u1_frames, layout.n_frames
    )

    analytic = beta_bank.fourier_filters
    mirrored = beta_bank.mirrored()
    spins = np.stack([m for pair in zip(mirrored, analytic) for m in pair])
    if phi_f is not None:
        zero_beta = frequential_operators(phi_f.fourier_gain, n_lambdas)
    else:
        zero_beta = np.eye(n_lambdas, dtype=np.complex128)[None]
    second_order_ops = np.concatenate([zero_beta, frequential_operators(spins, n_lambdas)], axis=0)

    logger.debug(
        "JTFS plan: N=%d padded=%d lambdas=%d alphas=%d betas=%d u1_stride=%d frames=%d kept=%s",
        num_samples, length, n_lambdas, len(layout.alphas), len(layout.betas),
        s_u, layout.n_frames, [len(f) for f in alpha_frames],
    )
    return JtfsPlan(
        cfg=cfg,
        num_samples=num_samples,
        sample_rate=float(sample_rate),
        layout=layout,
        lambda_bank=lambda_bank,
        alpha_bank=alpha_bank,
        beta_bank=beta_bank,
        u1_lowpass=build_lowpass(s_u, length) if s_u > 1 else None,
        row_masks=row_masks,
        alpha_rows=alpha_rows,
        alpha_frames=tuple(alpha_frames),
        alpha_averaging=tuple(alpha_averaging),
        u1_averaging=u1_averaging,
        second_order_ops=second_order_ops,
        first_order_ops=frequential_operators(analytic, n_lambdas),
        lowpass_op=frequential_operators(phi_f.fourier_gain, n_lambdas)[0].real if phi_f is not None else None,
    )


def jtfs_coefficient_count(cfg: ScatteringConfig, num_samples: int, sample_rate: float = 8192) -> int:
    """Number of scalars in the flattened coefficient vector."""
    return plan_layout(cfg, num_samples, sample_rate).coefficient_count


# --- Containers ---

@dataclass(frozen=True, eq=False)
class Scalogram:
    """
    First-order modulus coefficients

    ``values`` spans the whole zero-padded transform, shape
    (n_lambdas, padded_length // stride); rows are ordered by ascending
    centre frequency, so the row index is proportional to log2(lambda).
    """
    values: Dual
    lambda_axis: np.ndarray
    stride: int
    num_samples: int
    sample_rate: float

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.stride

    @property
    def num_frames(self) -> int:
        """Frames covering the signal buffer."""
        return math.ceil(self.num_samples / self.stride)

    def valid(self) -> Dual:
        return self.values[:, : self.num_frames]


@dataclass(frozen=True, eq=False)
class SecondOrderPath:
    """One unaveraged path; ``values`` holds the kept frames and ``averaging`` maps them to the output frames."""
    info: PathInfo
    values: Dual
    stride: int
    averaging: np.ndarray
    plan: JtfsPlan


@dataclass(frozen=True, eq=False)
class JtfsCoeffs:
    """
    Scattering coefficients

    s1 has shape (n_s1_paths, n_lambdas, n_frames), s2 has shape
    (n_s2_paths, n_lambdas, n_frames). Path order: s1 is [beta = 0, then
    ascending beta]; s2 is alpha-major (ascending), and within each alpha
    [beta = 0, then ascending beta with spin +1 before spin -1].
    """
    s1: Dual
    s2: Dual
    s1_paths: List[PathInfo]
    s2_paths: List[PathInfo]
    lambda_axis: np.ndarray
    frame_rate: float
    config: ScatteringConfig

    @property
    def paths(self) -> List[PathInfo]:
        return self.s1_paths + self.s2_paths

    def flatten(self) -> Dual:
        """s1 then s2, path-major, time-minor."""
        return dual.concatenate([self.s1.reshape(-1), self.s2.reshape(-1)], axis=-1)

    def __len__(self) -> int:
        return self.s1.size + self.s2.size


# --- Linear maps ---

def _along_lambda(v: Dual, ops: np.ndarray) -> Dual:
    """Apply a (K, M, M_in) operator stack to the lambda axis (-2); result (..., K, M, frames)."""
    k, m, c = ops.shape
    flat = ops.reshape(k * m, c)

    def apply(a: np.ndarray) -> np.ndarray:
        out = np.matmul(flat, a)
        return out.reshape(out.shape[:-2] + (k, m, out.shape[-1]))

    return v.apply_linear(apply)


def _over_frames(v: Dual, matrix: np.ndarray) -> Dual:
    return v.apply_linear(lambda a: np.matmul(a, matrix))


def _frequential_lowpass(y: Dual, plan: JtfsPlan) -> Dual:
    """phi_F along lambda followed by subsampling; identity when F = 0."""
    if plan.lowpass_op is None:
        return y
    op = plan.lowpass_op
    smoothed = y.apply_linear(lambda a: np.matmul(op, a))
    step = plan.layout.lambda_stride
    return smoothed[..., ::step, :] if step > 1 else smoothed


def _subsample_lambda(y: Dual, plan: JtfsPlan) -> Dual:
    step = plan.layout.lambda_stride
    return y[..., ::step, :] if step > 1 else y


# --- Transform ---

def _plan_for(U1: Scalogram, cfg: ScatteringConfig) -> JtfsPlan:
    return build_plan(cfg, U1.num_samples, U1.sample_rate)


def scalogram(x: Signal, cfg: ScatteringConfig) -> Scalogram:
    """
    Modulus of the first-order wavelet transform

    Filters are applied in blocks of lambdas; each block is smoothed and
    decimated to the plan's U1 stride right after the modulus.
    """
    if x.samples.ndim != 1:
        raise ConfigurationError(f"expected a 1-d signal, got shape {x.samples.shape}")
    plan = build_plan(cfg, len(x), float(x.sample_rate))
    layout = plan.layout
    length = layout.padded_length
    filters = plan.lambda_bank.fourier_filters
    block = max(1, _LAMBDA_BUDGET // length)

    spectrum = dual.fft(x.samples, n=length)
    rows = []
    for start in range(0, len(filters), block):
        u = dual.ifft(spectrum * filters[start:start + block], axis=-1).modulus()
        if plan.u1_lowpass is not None:
            u = lowpass_decimate(u, plan.u1_lowpass, layout.u1_stride, axis=-1)
        rows.append(u)

    values = rows[0] if len(rows) == 1 else dual.concatenate(rows, axis=-2)
    return Scalogram(
        values=values,
        lambda_axis=plan.lambda_bank.center_freqs,
        stride=layout.u1_stride,
        num_samples=len(x),
        sample_rate=float(x.sample_rate),
    )


def _alpha_paths(plan: JtfsPlan, alpha: float) -> List[PathInfo]:
    infos = [PathInfo(order=2, alpha=float(alpha))]
    for beta in plan.beta_bank.center_freqs:
        infos.append(PathInfo(order=2, alpha=float(alpha), beta=float(beta), spin=1))
        infos.append(PathInfo(order=2, alpha=float(alpha), beta=float(beta), spin=-1))
    return infos


def _alpha_band(spectrum: Dual, plan: JtfsPlan, i: int) -> Dual:
    """U1 * psi_alpha on the retained rows, at the alpha stride, on the kept frames only."""
    layout = plan.layout
    factor = layout.alpha_strides[i] // layout.u1_stride
    band = fold_spectrum(spectrum[plan.alpha_rows[i]] * plan.alpha_bank.fourier_filters[i], factor, axis=-1)
    return dual.ifft(band, axis=-1)[:, plan.alpha_frames[i]]


def _iter_alpha_blocks(spectrum: Dual, plan: JtfsPlan, i: int) -> Iterator[Tuple[int, Dual]]:
    """
    Unaveraged moduli of every path of alpha ``i`` in blocks of frames

    All beta / spin operators act in one matrix product per block. Yields
    (first kept frame, dual of shape (1 + 2 n_betas, M, block)).
    """
    y = _alpha_band(spectrum, plan, i)
    ops = plan.second_order_ops[:, :, plan.alpha_rows[i]]
    block = max(1, _BLOCK_BUDGET // (ops.shape[0] * ops.shape[1]))
    for start in range(0, y.shape[-1], block):
        yield start, _along_lambda(y[:, start:start + block], ops).modulus()


def _averaged_alpha(spectrum: Dual, plan: JtfsPlan, i: int) -> Dual:
    matrix = plan.alpha_averaging[i]
    total = None
    for start, u2 in _iter_alpha_blocks(spectrum, plan, i):
        part = _over_frames(u2, matrix[start:start + u2.shape[-1]])
        total = part if total is None else total + part
    return total


def iter_second_order(U1: Scalogram, cfg: ScatteringConfig) -> Iterator[SecondOrderPath]:
    """
    Yield unaveraged second-order paths one at a time

    For each retained alpha: the beta = 0 branch |U1 * psi_alpha (* phi_F)|,
    then for each beta the spin +1 and spin -1 branches
    |U1 * psi_alpha * psi_beta|. Ascending ridges live where temporal and
    frequential frequencies have opposite signs, so spin +1 uses the
    frequential filter mirrored to negative frequencies. Paths cover the
    kept frames of their alpha.
    """
    plan = _plan_for(U1, cfg)
    layout = plan.layout
    spectrum = dual.fft(U1.values, axis=-1)

    for i, alpha in enumerate(layout.alphas):
        blocks = [u2 for _, u2 in _iter_alpha_blocks(spectrum, plan, i)]
        u2 = blocks[0] if len(blocks) == 1 else dual.concatenate(blocks, axis=-1)
        for k, info in enumerate(_alpha_paths(plan, alpha)):
            yield SecondOrderPath(info, u2[k], layout.alpha_strides[i], plan.alpha_averaging[i], plan)


def jtfs_second_order_raw(U1: Scalogram, cfg: ScatteringConfig) -> List[SecondOrderPath]:
    """All unaveraged second-order paths, materialized; prefer ``iter_second_order`` for long signals."""
    return list(iter_second_order(U1, cfg))


def jtfs_s1(U1: Scalogram, cfg: ScatteringConfig) -> Tuple[Dual, List[PathInfo]]:
    """
    First-order JTFS coefficients, shape (1 + n_betas, n_lambdas, n_frames)

    Path 0 is the lowpass branch U1 * phi_T (* phi_F); the others are
    |U1 * phi_T * psi_beta| for ascending beta.
    """
    plan = _plan_for(U1, cfg)
    averaged = _over_frames(U1.values, plan.u1_averaging)

    lowpass = abs(_frequential_lowpass(averaged, plan))
    bands = _frequential_lowpass(_along_lambda(averaged, plan.first_order_ops).modulus(), plan)
    paths = [PathInfo(order=1)] + [PathInfo(order=1, beta=float(b)) for b in plan.beta_bank.center_freqs]
    return dual.concatenate([lowpass.reshape((1,) + lowpass.shape), bands], axis=0), paths


def jtfs_s2(paths: Iterable[SecondOrderPath], cfg: ScatteringConfig) -> Tuple[Dual, List[PathInfo]]:
    """
    Average second-order paths: phi_T always, phi_F only when F > 0

    The beta = 0 branch already went through phi_F before its modulus.
    """
    coeffs = []
    infos = []
    for path in paths:
        v = _over_frames(path.values, path.averaging)
        v = _frequential_lowpass(v, path.plan) if path.info.beta > 0 else _subsample_lambda(v, path.plan)
        coeffs.append(v)
        infos.append(path.info)
    if not coeffs:
        raise ConfigurationError("no second-order paths to average")
    return dual.stack(coeffs, axis=0), infos


def _second_order(U1: Scalogram, cfg: ScatteringConfig) -> Tuple[Dual, List[PathInfo]]:
    """Same result as ``jtfs_s2(iter_second_order(U1, cfg), cfg)`` without holding unaveraged paths."""
    plan = _plan_for(U1, cfg)
    spectrum = dual.fft(U1.values, axis=-1)
    coeffs = []
    infos = []
    for i, alpha in enumerate(plan.layout.alphas):
        averaged = _averaged_alpha(spectrum, plan, i)
        coeffs.append(_subsample_lambda(averaged[:1], plan))
        coeffs.append(_frequential_lowpass(averaged[1:], plan))
        infos.extend(_alpha_paths(plan, alpha))
    return dual.concatenate(coeffs, axis=0), infos


def jtfs(x: Signal, cfg: ScatteringConfig) -> JtfsCoeffs:
    U1 = scalogram(x, cfg)
    s1, s1_paths = jtfs_s1(U1, cfg)
    s2, s2_paths = _second_order(U1, cfg)
    plan = _plan_for(U1, cfg)
    return JtfsCoeffs(
        s1=s1,
        s2=s2,
        s1_paths=s1_paths,
        s2_paths=s2_paths,
        lambda_axis=plan.lambda_bank.center_freqs[:: plan.layout.lambda_stride],
        frame_rate=x.sample_rate / plan.layout.final_stride,
        config=cfg,
    )


def relative_change(a: Union[JtfsCoeffs, np.ndarray], b: Union[JtfsCoeffs, np.ndarray]) -> float:
    """||a - b||_2 / ||a||_2 over the flattened primal coefficients."""
    va = a.flatten().value if isinstance(a, JtfsCoeffs) else np.ravel(a)
    vb = b.flatten().value if isinstance(b, JtfsCoeffs) else np.ravel(b)
    norm = float(np.linalg.norm(va))
    if norm == 0:
        raise ConfigurationError("relative change is undefined for all-zero coefficients")
    return float(np.linalg.norm(va - vb)) / norm
