import logging
import os
from pathlib import Path
from typing import Any, List, Literal, Optional, Tuple, Type

from pydantic import model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from app.schemas.experiment import GridSpec
from app.schemas.loss import MssConfig, PipelineConfig
from app.schemas.scattering import ScatteringConfig
from app.schemas.synth import SynthConfig, ThetaPoint

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    # Runtime
    LOG_LEVEL: str = "INFO"
    WORKERS: int = 1
    OUTPUT_DIR: Path = Path("results")
    WAV_FORMAT: Literal["pcm16", "float32"] = "pcm16"

    # Synthesizer
    SAMPLE_RATE: int = 8192
    NUM_SAMPLES: int = 2 ** 16
    CARRIER_HZ: float = 512.0
    ENVELOPE_OCTAVES: float = 2.0
    EVENT_RANGE: Optional[int] = None
    NORMALIZATION: Literal["peak", "energy"] = "peak"

    # Joint time-frequency scattering
    JTFS_J: int = 12
    JTFS_Q1: int = 8
    JTFS_Q2: int = 2
    JTFS_J_FR: int = 5
    JTFS_Q_FR: int = 2
    JTFS_T: int = 2 ** 13
    JTFS_F: int = 0
    JTFS_OVERSAMPLING: int = 1
    JTFS_PRUNE: bool = True

    # Multi-scale spectrogram
    MSS_MIN_EXPONENT: int = 5
    MSS_MAX_EXPONENT: int = 10
    MSS_HOP_DIVISOR: int = 4
    MSS_WINDOW: Literal["hann", "hamming", "blackman"] = "hann"

    # Experiments
    TARGET_FM: float = 8.49
    TARGET_GAMMA: float = 1.49
    INIT_FM: float = 4.0
    INIT_GAMMA: float = 0.5
    TAU: int = 2 ** 10
    TAU_LIST: List[int] = [2 ** 2, 2 ** 4, 2 ** 7, 2 ** 10]
    SHIFT_SWEEP_MAX: int = 2 ** 13
    GRID_POINTS: int = 20
    GRID_FM_MIN: float = 4.0
    GRID_FM_MAX: float = 16.0
    GRID_GAMMA_MIN: float = 0.5
    GRID_GAMMA_MAX: float = 4.0
    CHIRP_GAMMAS: List[float] = [0.5, 1.0, 2.0, 3.0, 4.0]
    SEED: int = 0

    # Optimizer
    MAX_ITERS: int = 200
    TOL: float = 1e-6
    LEARNING_RATE: float = 1e-3
    ROLLBACK: bool = True

    @model_validator(mode="after")
    def _check_suspicious_combinations(self) -> "Settings":
        if self.CARRIER_HZ > self.SAMPLE_RATE / 4:
            logger.warning(
                "CARRIER_HZ=%s is above a quarter of SAMPLE_RATE=%s; upper events will alias.",
                self.CARRIER_HZ, self.SAMPLE_RATE,
            )
        cpus = os.cpu_count() or 1
        if self.WORKERS > cpus:
            logger.warning("WORKERS=%d exceeds the %d available CPUs.", self.WORKERS, cpus)
        if self.JTFS_T > self.NUM_SAMPLES:
            logger.warning(
                "JTFS_T=%d is longer than the signal (%d samples); coefficients reduce to one frame.",
                self.JTFS_T, self.NUM_SAMPLES,
            )
        return self

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # explicit flags, then the experiment file, then the environment
        return init_settings, dotenv_settings, env_settings, file_secret_settings

    # --- Derived configs ---

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            f_c=self.CARRIER_HZ,
            w=self.ENVELOPE_OCTAVES,
            sample_rate=self.SAMPLE_RATE,
            num_samples=self.NUM_SAMPLES,
            event_range=self.EVENT_RANGE,
            normalization=self.NORMALIZATION,
        )

    def scattering_config(self) -> ScatteringConfig:
        return ScatteringConfig(
            J=self.JTFS_J,
            Q1=self.JTFS_Q1,
            Q2=self.JTFS_Q2,
            J_fr=self.JTFS_J_FR,
            Q_fr=self.JTFS_Q_FR,
            T=self.JTFS_T,
            F=self.JTFS_F,
            oversampling=self.JTFS_OVERSAMPLING,
            prune=self.JTFS_PRUNE,
        )

    def mss_config(self) -> MssConfig:
        return MssConfig(
            min_exponent=self.MSS_MIN_EXPONENT,
            max_exponent=self.MSS_MAX_EXPONENT,
            hop_divisor=self.MSS_HOP_DIVISOR,
            window=self.MSS_WINDOW,
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            synth=self.synth_config(),
            scattering=self.scattering_config(),
            mss=self.mss_config(),
        )

    def grid_spec(self, points: Optional[int] = None) -> GridSpec:
        return GridSpec(
            f_m_range=(self.GRID_FM_MIN, self.GRID_FM_MAX),
            gamma_range=(self.GRID_GAMMA_MIN, self.GRID_GAMMA_MAX),
            points_per_axis=points or self.GRID_POINTS,
            f_c=self.CARRIER_HZ,
        )

    def target(self) -> ThetaPoint:
        return ThetaPoint(f_m=self.TARGET_FM, gamma=self.TARGET_GAMMA)

    def init(self) -> ThetaPoint:
        return ThetaPoint(f_m=self.INIT_FM, gamma=self.INIT_GAMMA)

    def snapshot(self) -> dict:
        return self.model_dump(mode="json")


def load_settings(config_file: Optional[Path] = None, **overrides: Any) -> Settings:
    """
    Settings from flags, a flat key=value experiment file, the environment and defaults

    Flags that were not given (None) are ignored. Without ``config_file``
    the usual ``.env`` is read.
    """
    flags = {k: v for k, v in overrides.items() if v is not None}
    if config_file is not None:
        return Settings(_env_file=config_file, **flags)
    return Settings(**flags)
