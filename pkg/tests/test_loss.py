"""Tests for the JTFS and MSS losses in app/utils/loss.py."""
import numpy as np
import pytest
from unittest.mock import patch


@pytest.fixture(autouse=True)
def _fresh_target_cache():
    from app.utils.loss import clear_target_cache

    clear_target_cache()
    yield
    clear_target_cache()


def patch_synthesize():
    from app.utils import synth

    return patch("app.utils.loss.synthesize", wraps=synth.synthesize)


def patch_loss(name):
    return patch(f"app.utils.loss.{name}")


def grid_pairs(count, seed):
    """Distinct (target, prediction) pairs drawn from the default grid."""
    from app.schemas.experiment import GridSpec

    points = GridSpec().points()
    rng = np.random.default_rng(seed)
    return [
        tuple(points[k] for k in rng.choice(len(points), size=2, replace=False))
        for _ in range(count)
    ]


def assert_gradient_matches(loss_fn, target, pred, cfg):
    from app.schemas.synth import ThetaPoint
    from app.utils.dual import fd_oracle

    def value(t):
        return loss_fn(target, ThetaPoint.from_array(t), 0, 0, cfg).value

    coarse = fd_oracle(value, pred.as_array(), h=1e-5)
    fine = fd_oracle(value, pred.as_array(), h=1e-6)
    scale = np.linalg.norm(fine)
    assert scale > 0
    # a tenfold smaller step agrees, so the difference quotient has converged
    assert np.linalg.norm(coarse - fine) <= 1e-4 * scale
    analytic = np.asarray(loss_fn(target, pred, 0, 0, cfg).gradient)
    assert np.linalg.norm(analytic - fine) <= 1e-3 * scale, (target, pred, analytic, fine)


# ---------------------------------------------------------------------------
# Parameter distance
# ---------------------------------------------------------------------------

def test_param_distance_is_squared_euclidean():
    from app.schemas.synth import ThetaPoint
    from app.utils.loss import param_distance

    a = ThetaPoint(f_m=4.0, gamma=1.0)
    b = ThetaPoint(f_m=7.0, gamma=5.0)
    assert param_distance(a, b) == 25.0
    assert param_distance(a, a) == 0.0


# ---------------------------------------------------------------------------
# JTFS loss
# ---------------------------------------------------------------------------

def test_jtfs_loss_vanishes_at_the_target(pipeline_cfg, target):
    from app.utils.loss import jtfs_loss

    value = jtfs_loss(target, target, 0, 0, pipeline_cfg)
    assert value.value == pytest.approx(0.0, abs=1e-18)
    assert value.gradient == pytest.approx((0.0, 0.0), abs=1e-9)


def test_jtfs_loss_grows_away_from_the_target(pipeline_cfg, target):
    from app.schemas.synth import ThetaPoint
    from app.utils.loss import jtfs_loss

    near = jtfs_loss(target, ThetaPoint(f_m=8.0, gamma=1.4), 0, 0, pipeline_cfg).value
    far = jtfs_loss(target, ThetaPoint(f_m=5.0, gamma=3.0), 0, 0, pipeline_cfg).value
    assert 0 < near < far


@pytest.mark.parametrize("pair", grid_pairs(20, seed=11), ids=lambda p: f"{p[0].f_m:.2f}-{p[0].gamma:.2f}")
def test_jtfs_gradient_matches_finite_differences(pipeline_cfg, pair):
    from app.utils.loss import jtfs_loss

    assert pipeline_cfg.synth.normalization == "peak"
    assert_gradient_matches(jtfs_loss, *pair, pipeline_cfg)


def test_jtfs_loss_is_nearly_shift_invariant(pipeline_cfg, target):
    from app.utils.loss import jtfs_loss

    shifted = jtfs_loss(target, target, 0, 8, pipeline_cfg).value
    far = jtfs_loss(target, target, 0, 1024, pipeline_cfg).value
    assert shifted < far


def test_jtfs_target_is_cached(pipeline_cfg, target):
    from app.utils import loss

    with patch_synthesize() as spy:
        loss.jtfs_loss(target, target, 0, 0, pipeline_cfg)
        loss.jtfs_loss(target, target, 0, 0, pipeline_cfg)
    # one target render, two predictions
    assert spy.call_count == 3


# ---------------------------------------------------------------------------
# MSS loss
# ---------------------------------------------------------------------------

def test_stft_magnitude_shape_and_centring():
    from app.utils import dual
    from app.utils.loss import stft_magnitude

    x = dual.constant(np.zeros(256))
    x.value[128] = 1.0
    spec = stft_magnitude(x, 64, 16)
    assert spec.shape == (1 + 256 // 16, 33)
    # frame k is centred on sample k * hop
    energy = spec.value.sum(axis=-1)
    assert int(np.argmax(energy)) == 128 // 16


def test_mss_loss_vanishes_at_the_target(pipeline_cfg, target):
    from app.utils.loss import mss_loss

    value = mss_loss(target, target, 0, 0, pipeline_cfg)
    assert value.value == pytest.approx(0.0, abs=1e-12)


def test_mss_loss_is_sensitive_to_time_shift(pipeline_cfg, target):
    from app.utils.loss import mss_loss

    assert mss_loss(target, target, 0, 256, pipeline_cfg).value > 0.0


@pytest.mark.parametrize("pair", grid_pairs(20, seed=12), ids=lambda p: f"{p[0].f_m:.2f}-{p[0].gamma:.2f}")
def test_mss_gradient_matches_finite_differences(pipeline_cfg, pair):
    from app.utils.loss import mss_loss

    assert pipeline_cfg.synth.normalization == "peak"
    assert_gradient_matches(mss_loss, *pair, pipeline_cfg)


def test_evaluate_loss_dispatches(pipeline_cfg, target):
    from app.schemas.loss import LossKind
    from app.utils.loss import evaluate_loss

    with patch_loss("jtfs_loss") as jtfs_spy, patch_loss("mss_loss") as mss_spy:
        evaluate_loss(LossKind.JTFS, target, target, 0, 0, pipeline_cfg)
        evaluate_loss("mss", target, target, 0, 0, pipeline_cfg)
    jtfs_spy.assert_called_once()
    mss_spy.assert_called_once()


# ---------------------------------------------------------------------------
# Signal distances
# ---------------------------------------------------------------------------

def test_distances_between_signals(pipeline_cfg, target):
    from app.utils.loss import jtfs_distance, mss_distance
    from app.utils.synth import synthesize

    x = synthesize(target, pipeline_cfg.synth)
    y = synthesize(target, pipeline_cfg.synth, tau=512)
    assert jtfs_distance(x, x, pipeline_cfg) == 0.0
    assert mss_distance(x, x, pipeline_cfg) == 0.0
    assert jtfs_distance(x, y, pipeline_cfg) > 0.0
    assert mss_distance(x, y, pipeline_cfg) > 0.0
