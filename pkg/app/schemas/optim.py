from pydantic import BaseModel, ConfigDict, Field
from typing import List, Literal, Optional

from app.schemas.loss import LossKind
from app.schemas.synth import ThetaPoint


class TrajectoryRecord(BaseModel):
    """
    One gradient-descent iteration

    ``f_m``/``gamma``/``loss`` describe the iterate kept after the step;
    ``proposed_loss`` is the loss of the candidate that was evaluated.
    """
    model_config = ConfigDict(frozen=True)

    iteration: int = Field(..., ge=0)
    f_m: float
    gamma: float
    loss: float = Field(..., description="Loss at the kept iterate")
    proposed_loss: float = Field(..., description="Loss at the evaluated candidate (inf when the candidate was degenerate)")
    grad_f_m: float
    grad_gamma: float
    lr_f_m: float = Field(..., gt=0)
    lr_gamma: float = Field(..., gt=0)
    distance: float = Field(..., ge=0, description="Squared parameter distance to the target")
    accepted: bool = True
    clamped: bool = Field(False, description="Candidate hit the domain floor")

    @property
    def theta(self) -> ThetaPoint:
        return ThetaPoint(f_m=self.f_m, gamma=self.gamma)


class Trajectory(BaseModel):
    loss_kind: LossKind
    target: ThetaPoint
    init: ThetaPoint
    tau_target: int = 0
    tau_pred: int = 0
    rollback: bool = True
    records: List[TrajectoryRecord] = Field(default_factory=list)
    stop_reason: Literal["converged", "stalled", "max_iters", "running"] = "running"

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    @property
    def initial_distance(self) -> float:
        return self.records[0].distance

    @property
    def final_distance(self) -> float:
        return self.records[-1].distance

    @property
    def final_theta(self) -> ThetaPoint:
        return self.records[-1].theta

    @property
    def clamp_count(self) -> int:
        return sum(r.clamped for r in self.records)

    def reduction(self) -> Optional[float]:
        """Ratio of initial to final parameter distance (not squared); None when the run started at the target."""
        if self.initial_distance == 0:
            return None
        if self.final_distance == 0:
            return float("inf")
        return (self.initial_distance / self.final_distance) ** 0.5
