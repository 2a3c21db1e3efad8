"""Shared test fixtures for the mesostruct test suite."""
import pytest

from app.schemas.loss import MssConfig, PipelineConfig
from app.schemas.scattering import ScatteringConfig
from app.schemas.synth import SynthConfig, ThetaPoint

# 4 s at 2048 Hz keeps every transform in the test suite well under a second
SMALL_SYNTH = dict(sample_rate=2048, f_c=128.0, num_samples=2 ** 13)
SMALL_JTFS = dict(J=8, Q1=4, Q2=1, J_fr=3, Q_fr=1, T=2 ** 10)
SMALL_MSS = dict(min_exponent=5, max_exponent=8)

SMALL_ENV = {
    "SAMPLE_RATE": "2048",
    "NUM_SAMPLES": str(2 ** 13),
    "CARRIER_HZ": "128",
    "JTFS_J": "8",
    "JTFS_Q1": "4",
    "JTFS_Q2": "1",
    "JTFS_J_FR": "3",
    "JTFS_Q_FR": "1",
    "JTFS_T": str(2 ** 10),
    "MSS_MAX_EXPONENT": "8",
}


@pytest.fixture
def synth_cfg() -> SynthConfig:
    return SynthConfig(**SMALL_SYNTH)


@pytest.fixture
def jtfs_cfg() -> ScatteringConfig:
    return ScatteringConfig(**SMALL_JTFS)


@pytest.fixture
def pipeline_cfg(synth_cfg, jtfs_cfg) -> PipelineConfig:
    return PipelineConfig(synth=synth_cfg, scattering=jtfs_cfg, mss=MssConfig(**SMALL_MSS))


@pytest.fixture
def target() -> ThetaPoint:
    return ThetaPoint(f_m=8.49, gamma=1.49)


@pytest.fixture
def small_env(monkeypatch, tmp_path):
    """Settings environment for the small configuration, outputs under tmp_path."""
    for key, value in SMALL_ENV.items():
        monkeypatch.setenv(key, value)
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.chdir(tmp_path)
    return tmp_path
