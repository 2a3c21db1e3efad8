"""Tests for the arpeggiator in app/utils/synth.py and its schemas."""
import numpy as np
import pytest
from pydantic import ValidationError


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------

def test_theta_point_parse_and_array_round_trip():
    from app.schemas.synth import ThetaPoint

    theta = ThetaPoint.parse("8.49, 1.49")
    assert theta == ThetaPoint(f_m=8.49, gamma=1.49)
    assert ThetaPoint.from_array(theta.as_array()) == theta


@pytest.mark.parametrize("text", ["8.49", "1,2,3", ""])
def test_theta_point_parse_rejects_wrong_arity(text):
    from app.schemas.synth import ThetaPoint

    with pytest.raises(ValueError):
        ThetaPoint.parse(text)


def test_theta_point_requires_positive_values():
    from app.schemas.synth import ThetaPoint

    with pytest.raises(ValidationError):
        ThetaPoint(f_m=8.0, gamma=0.0)


def test_synth_config_validation():
    from app.schemas.synth import SynthConfig

    with pytest.raises(ValidationError):
        SynthConfig(num_samples=1000)
    with pytest.raises(ValidationError):
        SynthConfig(sample_rate=1000, f_c=600.0)
    assert SynthConfig().duration == 8.0


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def test_synthesize_is_peak_normalized(synth_cfg, target):
    from app.utils.synth import synthesize

    x = synthesize(target, synth_cfg)
    assert x.num_samples == synth_cfg.num_samples
    # the envelope maximum falls between samples, so the sampled peak sits just below 1
    assert 0.9 < np.max(np.abs(x.values)) <= 1.0 + 1e-12
    assert x.samples.is_constant


def test_energy_normalization(synth_cfg, target):
    from app.utils.synth import synthesize

    cfg = synth_cfg.model_copy(update={"normalization": "energy"})
    x = synthesize(target, cfg)
    assert np.sum(x.values ** 2) == pytest.approx(1.0)


def test_signal_is_deterministic(synth_cfg, target):
    from app.utils.synth import synthesize

    a = synthesize(target, synth_cfg).values
    b = synthesize(target, synth_cfg).values
    assert np.array_equal(a, b)


@pytest.mark.parametrize(
    "f_m, gamma", [(4.0, 0.5), (4.0, 4.0), (16.0, 0.5), (16.0, 4.0), (8.49, 1.49)]
)
def test_default_event_range_reaches_the_envelope_cutoff(synth_cfg, f_m, gamma):
    from app.schemas.synth import ThetaPoint
    from app.utils.synth import ENVELOPE_CUTOFF, default_event_range

    theta = ThetaPoint(f_m=f_m, gamma=gamma)
    n_max = default_event_range(theta, synth_cfg)

    def weight(n):
        return np.exp(-((gamma * n / f_m) ** 2) / (2.0 * synth_cfg.w ** 2))

    assert weight(n_max) < ENVELOPE_CUTOFF
    # and it is the smallest such range
    assert weight(n_max - 1) >= ENVELOPE_CUTOFF


def test_event_range_override_silences_later_events(synth_cfg):
    from app.schemas.synth import ThetaPoint
    from app.utils.synth import synthesize, time_axis

    cfg = synth_cfg.model_copy(update={"event_range": 2})
    theta = ThetaPoint(f_m=4.0, gamma=4.0)
    x = synthesize(theta, cfg).values
    t = time_axis(cfg)
    outside = (t < -2 / theta.f_m) | (t >= 3 / theta.f_m)
    assert np.all(x[outside] == 0.0)
    assert np.abs(x[~outside]).max() > 0.5


def test_at_most_one_event_per_sample(synth_cfg, target):
    from app.utils.synth import chirplet_amp, time_axis

    t = time_axis(synth_cfg)
    k = np.floor(target.f_m * t)
    u = t - k / target.f_m
    amp = chirplet_amp(u, target.f_m).value
    # the half-sine occupies the first half of every event period
    assert np.all(amp[target.f_m * u >= 0.5] == 0.0)
    assert np.all(amp >= 0.0)


def test_instantaneous_frequency_starts_at_transposed_carrier(synth_cfg, target):
    from app.utils.synth import instantaneous_frequency

    k = 2
    onset = k / target.f_m
    f0 = instantaneous_frequency(onset, k, target, synth_cfg)
    assert f0 == pytest.approx(synth_cfg.f_c * 2 ** (target.gamma * k / target.f_m))


def test_chirplet_phase_derivative_is_instantaneous_frequency():
    from app.utils.synth import chirplet_phase

    t = np.array([0.0, 0.01, 0.05])
    h = 1e-7
    numeric = (chirplet_phase(t + h, 256.0, 2.0).value - chirplet_phase(t - h, 256.0, 2.0).value) / (2 * h)
    assert numeric == pytest.approx(256.0 * 2.0 ** (2.0 * t), rel=1e-5)


def test_chirplet_phase_rejects_nonpositive_rate():
    from app.schemas.error import NumericDomainError
    from app.utils.synth import chirplet_phase

    with pytest.raises(NumericDomainError):
        chirplet_phase(np.zeros(4), 512.0, 0.0)


def test_event_count_matches_onsets(synth_cfg):
    from app.schemas.synth import ThetaPoint
    from app.utils.synth import event_count, event_onsets

    theta = ThetaPoint(f_m=6.0, gamma=4.0)
    nu = event_count(theta, synth_cfg.w)
    assert nu == pytest.approx(3.0)
    assert abs(len(event_onsets(theta, synth_cfg)) - nu) <= 1


@pytest.mark.parametrize("f_m, gamma", [(4.0, 0.5), (4.0, 4.0), (16.0, 0.5), (16.0, 4.0)])
def test_event_count_matches_audible_events_at_grid_corners(f_m, gamma):
    from scipy.signal import hilbert

    from app.schemas.synth import SynthConfig, ThetaPoint
    from app.utils.synth import NU_FLOOR, event_count, synthesize, time_axis

    cfg = SynthConfig()
    theta = ThetaPoint(f_m=f_m, gamma=gamma)
    envelope = np.abs(hilbert(synthesize(theta, cfg).values))
    k = np.floor(f_m * time_axis(cfg))
    loudest = np.array([envelope[k == event].max() for event in np.unique(k)])
    audible = int(np.sum(loudest >= NU_FLOOR * envelope.max()))
    assert abs(audible - event_count(theta, cfg.w)) <= 1


def test_normalize_rejects_silence(synth_cfg):
    from app.schemas.error import DegenerateSignalError
    from app.utils import dual
    from app.utils.synth import Signal, normalize

    silent = Signal(samples=dual.constant(np.zeros(16)), sample_rate=synth_cfg.sample_rate)
    with pytest.raises(DegenerateSignalError):
        normalize(silent)


# ---------------------------------------------------------------------------
# Time shift
# ---------------------------------------------------------------------------

def test_time_shift_delays_with_zero_fill(synth_cfg, target):
    from app.utils.synth import synthesize, time_shift

    x = synthesize(target, synth_cfg)
    shifted = time_shift(x, 100)
    assert np.all(shifted.values[:100] == 0.0)
    assert np.array_equal(shifted.values[100:], x.values[:-100])
    advanced = time_shift(x, -100)
    assert np.array_equal(advanced.values[:-100], x.values[100:])


def test_time_shift_range(synth_cfg, target):
    from app.schemas.error import ShiftRangeError
    from app.utils.synth import synthesize, time_shift

    x = synthesize(target, synth_cfg)
    with pytest.raises(ShiftRangeError):
        time_shift(x, synth_cfg.num_samples)
    assert time_shift(x, 0).values.tolist() == x.values.tolist()


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------

def test_signal_tangents_match_finite_differences(synth_cfg, target):
    from app.schemas.synth import ThetaPoint
    from app.utils.synth import synthesize

    assert synth_cfg.normalization == "peak"
    x = synthesize(target, synth_cfg, differentiate=True)
    weights = np.random.default_rng(0).normal(size=synth_cfg.num_samples)

    def projected(theta):
        return float(weights @ synthesize(ThetaPoint.from_array(theta), synth_cfg).values)

    h = 1e-6
    for i in range(2):
        step = np.zeros(2)
        step[i] = h
        numeric = (projected(target.as_array() + step) - projected(target.as_array() - step)) / (2 * h)
        assert float(weights @ x.samples.tangent[i]) == pytest.approx(numeric, rel=1e-4, abs=1e-8)


@pytest.mark.parametrize("f_m, gamma", [(4.0, 0.5), (8.49, 1.49), (16.0, 4.0), (5.0, 3.0)])
def test_envelope_peak_is_the_envelope_maximum(f_m, gamma):
    from app.schemas.synth import ThetaPoint
    from app.utils.synth import envelope_peak

    w = 2.0
    t = np.linspace(0.0, 0.5 / f_m, 200001)
    envelope = np.exp(-((gamma * t) ** 2) / (2.0 * w ** 2)) * np.sin(2 * np.pi * f_m * t) / gamma
    peak = envelope_peak(ThetaPoint(f_m=f_m, gamma=gamma), w)
    assert peak.is_constant
    assert float(peak) == pytest.approx(envelope.max(), rel=1e-8)


@pytest.mark.parametrize("f_m, gamma", [(4.0, 0.5), (8.49, 1.49), (16.0, 4.0)])
def test_envelope_peak_tangents_match_finite_differences(f_m, gamma):
    from app.schemas.synth import ThetaPoint
    from app.utils.dual import fd_oracle
    from app.utils.synth import envelope_peak, lift_theta

    theta = ThetaPoint(f_m=f_m, gamma=gamma)
    peak = envelope_peak(lift_theta(theta), 2.0)
    numeric = fd_oracle(lambda t: float(envelope_peak(ThetaPoint.from_array(t), 2.0)), theta.as_array(), h=1e-6)
    assert peak.gradient == pytest.approx(numeric, rel=1e-6)


@pytest.mark.parametrize("f_m, gamma", [(4.0, 0.5), (4.0, 4.0), (16.0, 0.5), (16.0, 4.0)])
def test_sampled_peak_never_exceeds_one(synth_cfg, f_m, gamma):
    from app.schemas.synth import ThetaPoint
    from app.utils.synth import synthesize

    x = synthesize(ThetaPoint(f_m=f_m, gamma=gamma), synth_cfg).values
    assert np.abs(x).max() <= 1.0 + 1e-12


def test_glissando_has_no_events(synth_cfg):
    from app.utils.synth import glissando

    x = glissando(1.0, synth_cfg)
    n = synth_cfg.num_samples
    # continuous chirp: no silent gaps in the middle of the envelope
    middle = np.abs(x.samples.value[n // 2 - 64: n // 2 + 64])
    assert middle.max() > 0.5
    assert x.samples.is_constant
