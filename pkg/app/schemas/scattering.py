from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Literal


class ScatteringConfig(BaseModel):
    """
    Joint time-frequency scattering settings

    T and F are averaging supports in samples and log-frequency bins; F = 0
    disables frequential averaging.
    """
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "examples": [
                {"J": 12, "Q1": 8, "Q2": 2, "J_fr": 5, "Q_fr": 2, "T": 8192, "F": 0, "oversampling": 1}
            ]
        },
    )

    J: int = Field(12, ge=1, description="Octaves spanned by the first- and second-order temporal banks")
    Q1: int = Field(8, ge=1, description="First-order filters per octave")
    Q2: int = Field(2, ge=1, description="Second-order temporal filters per octave")
    J_fr: int = Field(5, ge=1, description="Octaves spanned by the frequential bank")
    Q_fr: int = Field(2, ge=1, description="Frequential filters per octave")
    T: int = Field(2 ** 13, ge=1, description="Temporal averaging support in samples")
    F: int = Field(0, ge=0, description="Frequential averaging support in bins (0 disables)")
    oversampling: int = Field(1, ge=0, description="Output frame rate is 2^oversampling / T")
    prune: bool = Field(True, description="Keep only second-order rates below the envelope bandwidth of each path")

    @model_validator(mode="after")
    def check_supports(self) -> "ScatteringConfig":
        if self.T & (self.T - 1):
            raise ValueError(f"T must be a power of two, got {self.T}")
        if self.T >> self.oversampling < 1:
            raise ValueError(f"oversampling {self.oversampling} exceeds log2(T)")
        if self.J * self.Q1 < 2:
            raise ValueError("the scalogram needs at least two frequency bins")
        return self

    @property
    def final_stride(self) -> int:
        return self.T >> self.oversampling


class PathInfo(BaseModel):
    """Metadata of one scattering path; alpha = 0 marks first-order paths, beta = 0 the lowpass branch."""
    model_config = ConfigDict(frozen=True)

    order: Literal[1, 2] = Field(..., description="Scattering order")
    alpha: float = Field(0.0, ge=0, description="Temporal modulation rate in Hz")
    beta: float = Field(0.0, ge=0, description="Frequential scale in cycles per octave")
    spin: Literal[-1, 0, 1] = Field(0, description="+1 ascending, -1 descending, 0 when beta = 0")
