from datetime import datetime, timezone
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np

from app.schemas.synth import ThetaPoint


class GridSpec(BaseModel):
    """
    Log-spaced grid over (f_m, gamma)

    Points are ordered f_m-major: index i * points_per_axis + j holds
    (f_m_values[i], gamma_values[j]).
    """
    model_config = ConfigDict(frozen=True)

    f_m_range: Tuple[float, float] = Field((4.0, 16.0), description="AM frequency range in Hz")
    gamma_range: Tuple[float, float] = Field((0.5, 4.0), description="Chirp rate range in octaves per second")
    points_per_axis: int = Field(20, ge=2)
    spacing: Literal["log"] = "log"
    f_c: float = Field(512.0, gt=0, description="Carrier frequency shared by every grid point")

    @model_validator(mode="after")
    def check_ranges(self) -> "GridSpec":
        for name, (lo, hi) in (("f_m_range", self.f_m_range), ("gamma_range", self.gamma_range)):
            if not 0 < lo < hi:
                raise ValueError(f"{name} must satisfy 0 < low < high, got ({lo}, {hi})")
        return self

    def f_m_values(self) -> np.ndarray:
        return np.geomspace(*self.f_m_range, self.points_per_axis)

    def gamma_values(self) -> np.ndarray:
        return np.geomspace(*self.gamma_range, self.points_per_axis)

    def points(self) -> List[ThetaPoint]:
        return [
            ThetaPoint(f_m=float(f), gamma=float(g))
            for f in self.f_m_values()
            for g in self.gamma_values()
        ]

    def __len__(self) -> int:
        return self.points_per_axis ** 2

    def nearest_cell(self, theta: ThetaPoint) -> Tuple[int, int]:
        """(i, j) of the grid point closest to theta in log coordinates."""
        i = int(np.argmin(np.abs(np.log(self.f_m_values()) - np.log(theta.f_m))))
        j = int(np.argmin(np.abs(np.log(self.gamma_values()) - np.log(theta.gamma))))
        return i, j

    def contains(self, theta: ThetaPoint) -> bool:
        return (self.f_m_range[0] <= theta.f_m <= self.f_m_range[1]
                and self.gamma_range[0] <= theta.gamma <= self.gamma_range[1])


class ExperimentRecord(BaseModel):
    """
    JSON sidecar written next to every output file
    """
    model_config = ConfigDict(
        json_schema_extra={
            "examples": [
                {
                    "id": "surface-0192f0c4-7b7e-7c1a-9d2e-5f1a2b3c4d5e",
                    "command": "surface",
                    "config": {"SAMPLE_RATE": 8192, "TAU": 1024},
                    "summary": {"argmin_f_m": 8.49, "argmin_gamma": 1.49},
                    "outputs": ["surface_jtfs.csv"],
                }
            ]
        }
    )

    id: str = Field(..., description="Time-ordered experiment identifier")
    command: str = Field(..., description="CLI subcommand that produced the outputs")
    config: Dict[str, Any] = Field(..., description="Exact settings snapshot used for the run")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Command arguments")
    summary: Dict[str, Any] = Field(default_factory=dict, description="Headline results")
    results: Optional[List[Dict[str, Any]]] = Field(None, description="Per-point results")
    outputs: List[str] = Field(default_factory=list, description="Files written by the run")
    started_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    finished_at: Optional[datetime] = None
