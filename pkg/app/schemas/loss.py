from enum import Enum
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Literal, List, Tuple

from app.schemas.scattering import ScatteringConfig
from app.schemas.synth import SynthConfig


class LossKind(str, Enum):
    JTFS = "jtfs"
    MSS = "mss"


class MssConfig(BaseModel):
    """
    Multi-scale spectrogram settings

    Window sizes run over 2^min_exponent ... 2^max_exponent inclusive.
    """
    model_config = ConfigDict(frozen=True)

    min_exponent: int = Field(5, ge=1, description="log2 of the smallest window")
    max_exponent: int = Field(10, ge=1, description="log2 of the largest window")
    hop_divisor: int = Field(4, ge=1, description="Hop size is window / hop_divisor")
    window: Literal["hann", "hamming", "blackman"] = Field("hann", description="Analysis taper")

    @model_validator(mode="after")
    def check_range(self) -> "MssConfig":
        if self.min_exponent > self.max_exponent:
            raise ValueError("min_exponent must not exceed max_exponent")
        return self

    @property
    def window_sizes(self) -> List[int]:
        return [2 ** n for n in range(self.min_exponent, self.max_exponent + 1)]


class PipelineConfig(BaseModel):
    """Everything a loss evaluation depends on."""
    model_config = ConfigDict(frozen=True)

    synth: SynthConfig = Field(default_factory=SynthConfig)
    scattering: ScatteringConfig = Field(default_factory=ScatteringConfig)
    mss: MssConfig = Field(default_factory=MssConfig)


class LossValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0, description="Loss value")
    gradient: Tuple[float, float] = Field(..., description="(dL/df_m, dL/dgamma) at the prediction")
