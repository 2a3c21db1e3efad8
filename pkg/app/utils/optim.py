"""Sound matching by gradient descent with a bold-driver learning rate."""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.schemas.error import (
    ConfigurationError,
    DegenerateSignalError,
    NumericDomainError,
    OptimizationError,
)
from app.schemas.experiment import GridSpec
from app.schemas.loss import LossKind, LossValue, PipelineConfig
from app.schemas.optim import Trajectory, TrajectoryRecord
from app.schemas.synth import ThetaPoint
from app.utils.loss import evaluate_loss, param_distance

logger = logging.getLogger(__name__)

THETA_FLOOR = 1e-3
GROWTH = 1.2
SHRINK = 0.5
# consecutive clamped candidates before a divergence warning
CLAMP_WARNING = 3
# consecutive rejections before a stop on tol counts as a stall
STALL_REJECTIONS = 3

Evaluator = Callable[[ThetaPoint], LossValue]


@dataclass(frozen=True)
class OptimizerState:
    theta: Tuple[float, float]
    learning_rate: Tuple[float, float]
    last_loss: float
    iteration: int = 0
    floor: float = THETA_FLOOR

    def __post_init__(self):
        if min(self.learning_rate) <= 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.learning_rate}")

    @property
    def theta_point(self) -> ThetaPoint:
        return ThetaPoint.from_array(self.theta)

    def propose(self, grad: Sequence[float]) -> np.ndarray:
        """Candidate theta - lr * grad, clamped to the floor in each coordinate."""
        step = np.asarray(self.theta) - np.asarray(self.learning_rate) * np.asarray(grad, dtype=np.float64)
        return np.maximum(step, self.floor)


def initial_learning_rate(grid: GridSpec, base: float = 1e-3) -> Tuple[float, float]:
    """``base`` scaled per coordinate by the squared extent of the grid."""
    f_lo, f_hi = grid.f_m_range
    g_lo, g_hi = grid.gamma_range
    return base * (f_hi - f_lo) ** 2, base * (g_hi - g_lo) ** 2


def calibrate_learning_rate(learning_rate: Sequence[float], grad: Sequence[float]) -> Tuple[float, float]:
    """
    Divide ``learning_rate`` by the norm of the first gradient

    The first step then moves ``learning_rate`` times the unit descent
    direction, whatever the scale of the loss. The direction itself is the
    raw gradient.

    Raises:
        OptimizationError: if the gradient is not finite
    """
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise OptimizationError(f"non-finite initial gradient {grad.tolist()}")
    norm = float(np.linalg.norm(grad))
    if norm == 0:
        return tuple(float(v) for v in learning_rate)
    return tuple(float(v) / norm for v in learning_rate)


def bold_driver_step(
    state: OptimizerState,
    grad: Sequence[float],
    new_loss: float,
    rollback: bool = True,
) -> Tuple[OptimizerState, bool]:
    """
    Apply one bold-driver update

    The candidate ``state.propose(grad)`` is kept and the learning rate grown
    by 1.2 when ``new_loss`` (the loss at the candidate) improves on
    ``state.last_loss``; otherwise the learning rate is halved and, with
    ``rollback``, the iterate stays where it was.

    Returns:
        (new state, whether the candidate was accepted)

    Raises:
        OptimizationError: if the gradient is not finite
    """
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise OptimizationError(f"non-finite gradient {grad.tolist()} at theta={state.theta}")

    candidate = tuple(float(v) for v in state.propose(grad))
    lr = np.asarray(state.learning_rate)
    if math.isfinite(new_loss) and new_loss < state.last_loss:
        return replace(
            state,
            theta=candidate,
            learning_rate=tuple(float(v) for v in lr * GROWTH),
            last_loss=float(new_loss),
            iteration=state.iteration + 1,
        ), True

    logger.debug("Rejected step at iteration %d: %.6g >= %.6g", state.iteration + 1, new_loss, state.last_loss)
    halved = tuple(float(v) for v in lr * SHRINK)
    if rollback or not math.isfinite(new_loss):
        return replace(state, learning_rate=halved, iteration=state.iteration + 1), False
    return replace(
        state,
        theta=candidate,
        learning_rate=halved,
        last_loss=float(new_loss),
        iteration=state.iteration + 1,
    ), False


def _safe_evaluate(evaluate: Evaluator, theta: ThetaPoint) -> Optional[LossValue]:
    try:
        return evaluate(theta)
    except (DegenerateSignalError, NumericDomainError) as e:
        logger.warning("Loss undefined at %s: %s", theta, e)
        return None


def sound_match(
    target: ThetaPoint,
    init: ThetaPoint,
    loss_kind: LossKind,
    tau_pred: int,
    max_iters: int,
    tol: float,
    cfg: Optional[PipelineConfig] = None,
    learning_rate: Optional[Tuple[float, float]] = None,
    rollback: bool = True,
    tau_target: int = 0,
    evaluate: Optional[Evaluator] = None,
    calibrate: bool = True,
) -> Trajectory:
    """
    Match ``target`` from ``init`` by gradient descent on the chosen loss

    Iterates until ``max_iters`` steps have been taken or the candidate
    moves less than ``tol`` in parameter space. A stop on ``tol`` after
    STALL_REJECTIONS or more rejections in a row is a stall: the learning
    rate collapsed rather than the gradient. The candidate is
    clamped to ``THETA_FLOOR`` in each coordinate; clamping is recorded,
    not fatal.

    Args:
        target: parameters of the target sound
        init: starting point
        loss_kind: jtfs or mss
        tau_pred: time shift of the prediction in samples
        max_iters: at least 1
        tol: stopping threshold on parameter movement
        cfg: pipeline settings (defaults when omitted)
        learning_rate: per-coordinate initial rate; defaults to the grid-scaled rate
        rollback: undo rejected steps
        tau_target: time shift of the target in samples
        evaluate: loss function of the predicted theta, overrides loss_kind/cfg
        calibrate: divide the initial rate by the norm of the first gradient

    Returns:
        Trajectory: the initial point plus one record per iteration
    """
    if max_iters < 1:
        raise ConfigurationError(f"max_iters must be at least 1, got {max_iters}")
    cfg = cfg or PipelineConfig()
    if evaluate is None:
        def evaluate(theta: ThetaPoint) -> LossValue:
            return evaluate_loss(loss_kind, target, theta, tau_target, tau_pred, cfg)
    if learning_rate is None:
        learning_rate = initial_learning_rate(GridSpec())

    first = evaluate(init)
    grad = first.gradient
    if calibrate:
        learning_rate = calibrate_learning_rate(learning_rate, grad)
    state = OptimizerState(theta=(init.f_m, init.gamma), learning_rate=tuple(learning_rate),
                           last_loss=first.value)
    trajectory = Trajectory(
        loss_kind=loss_kind, target=target, init=init,
        tau_target=tau_target, tau_pred=tau_pred, rollback=rollback,
    )
    trajectory.records.append(_record(state, first.value, grad, target, accepted=True, clamped=False))

    consecutive_clamps = 0
    rejections = 0
    for _ in range(max_iters):
        candidate = state.propose(grad)
        if np.linalg.norm(candidate - np.asarray(state.theta)) < tol:
            trajectory.stop_reason = "stalled" if rejections >= STALL_REJECTIONS else "converged"
            break

        clamped = bool(np.any(candidate <= state.floor))
        consecutive_clamps = consecutive_clamps + 1 if clamped else 0
        if consecutive_clamps == CLAMP_WARNING:
            logger.warning("Candidate clamped to the domain floor %d times in a row (%s run)",
                           CLAMP_WARNING, LossKind(loss_kind).value)

        result = _safe_evaluate(evaluate, ThetaPoint.from_array(candidate))
        new_loss = result.value if result is not None else float("inf")
        state, accepted = bold_driver_step(state, grad, new_loss, rollback=rollback)
        rejections = 0 if accepted else rejections + 1
        if result is not None and (accepted or not rollback):
            grad = result.gradient

        trajectory.records.append(
            _record(state, new_loss, grad, target, accepted=accepted, clamped=clamped)
        )
    else:
        trajectory.stop_reason = "max_iters"

    if trajectory.stop_reason == "stalled":
        logger.warning(
            "%s match stalled at %s: learning rate fell to %s after repeated rejections",
            LossKind(loss_kind).value, trajectory.final_theta, state.learning_rate,
        )
    logger.info(
        "%s match %s -> %s: distance %.4g -> %.4g after %d iterations (%s)",
        LossKind(loss_kind).value, init, trajectory.final_theta,
        trajectory.initial_distance, trajectory.final_distance,
        trajectory.iterations, trajectory.stop_reason,
    )
    return trajectory


def _record(
    state: OptimizerState,
    proposed_loss: float,
    grad: Sequence[float],
    target: ThetaPoint,
    accepted: bool,
    clamped: bool,
) -> TrajectoryRecord:
    theta = state.theta_point
    return TrajectoryRecord(
        iteration=state.iteration,
        f_m=theta.f_m,
        gamma=theta.gamma,
        loss=state.last_loss,
        proposed_loss=proposed_loss,
        grad_f_m=float(grad[0]),
        grad_gamma=float(grad[1]),
        lr_f_m=state.learning_rate[0],
        lr_gamma=state.learning_rate[1],
        distance=param_distance(theta, target),
        accepted=accepted,
        clamped=clamped,
    )


def replay_learning_rates(trajectory: Trajectory) -> List[Tuple[float, float]]:
    """Recompute the learning-rate sequence from the recorded losses with the x1.2 / /2 rule."""
    records = trajectory.records
    rates = [(records[0].lr_f_m, records[0].lr_gamma)]
    for prev, rec in zip(records, records[1:]):
        factor = GROWTH if rec.proposed_loss < prev.loss else SHRINK
        rates.append((rates[-1][0] * factor, rates[-1][1] * factor))
    return rates


def init_scenarios(target: ThetaPoint, grid: GridSpec, seed: int = 0, count: int = 5) -> Dict[str, List[ThetaPoint]]:
    """
    Initial points for the initialization study

    far: grid corners and edge midpoints farthest from the target in log
    coordinates; near: seeded draws within +-15% of the target in both
    coordinates; anywhere: seeded log-uniform draws over the grid.
    """
    rng = np.random.default_rng(seed)
    f_lo, f_hi = grid.f_m_range
    g_lo, g_hi = grid.gamma_range
    f_mid, g_mid = math.sqrt(f_lo * f_hi), math.sqrt(g_lo * g_hi)

    anchors = [(f, g) for f in (f_lo, f_mid, f_hi) for g in (g_lo, g_mid, g_hi) if (f, g) != (f_mid, g_mid)]
    log_target = np.log(target.as_array())
    anchors.sort(key=lambda p: -float(np.linalg.norm(np.log(p) - log_target)))
    far = [ThetaPoint(f_m=f, gamma=g) for f, g in anchors[:count]]

    near = [
        ThetaPoint(f_m=target.f_m * a, gamma=target.gamma * b)
        for a, b in rng.uniform(0.85, 1.15, size=(count, 2))
    ]

    log_lo = np.log([f_lo, g_lo])
    log_hi = np.log([f_hi, g_hi])
    anywhere = [ThetaPoint.from_array(np.exp(p)) for p in rng.uniform(log_lo, log_hi, size=(count, 2))]

    return {"far": far, "near": near, "anywhere": anywhere}
