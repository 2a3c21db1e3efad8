from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Literal, Optional

import numpy as np


# --- Parameter Schemas ---
class ThetaPoint(BaseModel):
    """
    AM/FM parameter pair of the arpeggiator

    f_m is both the half-sine AM rate and the event rate; gamma is the chirp
    rate of every chirplet and of the global envelope.
    """
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"examples": [{"f_m": 8.49, "gamma": 1.49}]},
    )

    f_m: float = Field(..., gt=0, description="AM frequency in Hz")
    gamma: float = Field(..., gt=0, description="Chirp rate in octaves per second")

    def as_array(self) -> np.ndarray:
        return np.array([self.f_m, self.gamma], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "ThetaPoint":
        f_m, gamma = (float(v) for v in values)
        return cls(f_m=f_m, gamma=gamma)

    @classmethod
    def parse(cls, text: str) -> "ThetaPoint":
        """Parse ``"f_m,gamma"`` as given on the command line."""
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 2:
            raise ValueError(f"expected 'f_m,gamma', got {text!r}")
        return cls(f_m=float(parts[0]), gamma=float(parts[1]))

    def __str__(self) -> str:
        return f"({self.f_m:.6g} Hz, {self.gamma:.6g} oct/s)"


# --- Synthesizer Schemas ---
class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    f_c: float = Field(512.0, gt=0, description="Carrier / onset frequency in Hz")
    w: float = Field(2.0, gt=0, description="Envelope width in octaves")
    sample_rate: int = Field(8192, gt=0, description="Sampling rate in Hz")
    num_samples: int = Field(2 ** 16, gt=0, description="Buffer length, a power of two")
    event_range: Optional[int] = Field(
        None, ge=0, description="Half-width of the event summation; derived from theta when unset"
    )
    normalization: Literal["peak", "energy"] = Field(
        "peak", description="Amplitude normalization applied to every rendered signal"
    )

    @model_validator(mode="after")
    def check_sampling(self) -> "SynthConfig":
        if self.num_samples & (self.num_samples - 1):
            raise ValueError(f"num_samples must be a power of two, got {self.num_samples}")
        if self.f_c >= self.sample_rate / 2:
            raise ValueError(
                f"carrier {self.f_c} Hz must be below Nyquist ({self.sample_rate / 2} Hz)"
            )
        return self

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate
