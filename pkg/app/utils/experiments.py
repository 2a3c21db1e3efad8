"""Experiment runners behind the command line: loss grids, matching runs, shift sweeps.

Independent work items go through ``parallel_map``: an anyio task group
dispatching to worker processes, bounded by a CapacityLimiter. With one
worker the items run inline, in order.
"""
import logging
import math
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, TypeVar

import anyio
import anyio.to_process
import numpy as np
from tqdm import tqdm

from app.schemas.experiment import GridSpec
from app.schemas.loss import LossKind, PipelineConfig
from app.schemas.optim import Trajectory
from app.schemas.synth import ThetaPoint
from app.utils.loss import evaluate_loss, mss_distance, jtfs_distance
from app.utils.optim import sound_match
from app.utils.synth import glissando, normalize

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

RANDOM_SHIFT_EXPONENTS = (8, 12)


# --- Worker pool ---

async def _map(fn: Callable[[T], R], items: Sequence[T], workers: int, desc: str, quiet: bool) -> List[R]:
    results: List[Optional[R]] = [None] * len(items)
    with tqdm(total=len(items), desc=desc, disable=quiet, file=sys.stderr, leave=False) as bar:
        if workers <= 1:
            for i, item in enumerate(items):
                results[i] = fn(item)
                bar.update()
            return results

        limiter = anyio.CapacityLimiter(workers)

        async def run(i: int, item: T) -> None:
            results[i] = await anyio.to_process.run_sync(fn, item, limiter=limiter)
            bar.update()

        async with anyio.create_task_group() as tg:
            for i, item in enumerate(items):
                tg.start_soon(run, i, item)
    return results


def parallel_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    workers: int = 1,
    desc: str = "",
    quiet: bool = False,
) -> List[R]:
    """Apply ``fn`` to every item, results in submission order; ``fn`` and items must pickle when workers > 1."""
    return anyio.run(_map, fn, list(items), max(1, int(workers)), desc, quiet)


def random_shifts(count: int, seed: int) -> List[int]:
    """Seeded shifts 2^n with n uniform over the integers 8..12."""
    rng = np.random.default_rng(seed)
    lo, hi = RANDOM_SHIFT_EXPONENTS
    return [int(2 ** n) for n in rng.integers(lo, hi + 1, size=count)]


# --- Loss grids ---

@dataclass(frozen=True)
class GridTask:
    kind: LossKind
    target: ThetaPoint
    point: ThetaPoint
    tau_target: int
    tau_pred: int
    cfg: PipelineConfig


def evaluate_grid_point(task: GridTask) -> Dict[str, float]:
    value = evaluate_loss(task.kind, task.target, task.point, task.tau_target, task.tau_pred, task.cfg)
    return {
        "f_m": task.point.f_m,
        "gamma": task.point.gamma,
        "tau": task.tau_pred,
        "loss": value.value,
        "grad_f_m": value.gradient[0],
        "grad_gamma": value.gradient[1],
    }


def run_grid(
    kind: LossKind,
    grid: GridSpec,
    target: ThetaPoint,
    tau_pred: int,
    cfg: PipelineConfig,
    workers: int = 1,
    random_tau: bool = False,
    seed: int = 0,
    quiet: bool = False,
) -> List[Dict[str, float]]:
    """Loss value and gradient at every grid point, f_m-major."""
    points = grid.points()
    shifts = random_shifts(len(points), seed) if random_tau else [tau_pred] * len(points)
    tasks = [GridTask(LossKind(kind), target, p, 0, s, cfg) for p, s in zip(points, shifts)]
    return parallel_map(evaluate_grid_point, tasks, workers, desc=f"{LossKind(kind).value} grid", quiet=quiet)


def surface_summary(rows: List[Dict[str, float]], grid: GridSpec, target: ThetaPoint) -> Dict[str, object]:
    losses = np.array([r["loss"] for r in rows])
    best = int(np.argmin(losses))
    n = grid.points_per_axis
    target_cell = grid.nearest_cell(target)
    return {
        "argmin_f_m": rows[best]["f_m"],
        "argmin_gamma": rows[best]["gamma"],
        "argmin_cell": [best // n, best % n],
        "target_cell": list(target_cell),
        "argmin_is_target": (best // n, best % n) == target_cell,
        "min_loss": float(losses.min()),
        "max_loss": float(losses.max()),
        "min_over_max": float(losses.min() / losses.max()) if losses.max() > 0 else 0.0,
    }


def field_alignment(rows: List[Dict[str, float]], target: ThetaPoint) -> float:
    """
    Fraction of grid points where -grad L points towards the target

    Measured in log-parameter coordinates: the gradient w.r.t. log theta is
    theta * dL/dtheta, the direction is log(target) - log(theta).
    """
    if not rows:
        return 0.0
    hits = 0
    for r in rows:
        direction = (math.log(target.f_m / r["f_m"]), math.log(target.gamma / r["gamma"]))
        descent = (-r["f_m"] * r["grad_f_m"], -r["gamma"] * r["grad_gamma"])
        hits += (descent[0] * direction[0] + descent[1] * direction[1]) > 0
    return hits / len(rows)


# --- Matching runs ---

@dataclass(frozen=True)
class MatchTask:
    kind: LossKind
    target: ThetaPoint
    init: ThetaPoint
    tau_pred: int
    max_iters: int
    tol: float
    cfg: PipelineConfig
    learning_rate: tuple
    rollback: bool = True


def run_match_task(task: MatchTask) -> Trajectory:
    return sound_match(
        task.target, task.init, task.kind, task.tau_pred, task.max_iters, task.tol,
        cfg=task.cfg, learning_rate=task.learning_rate, rollback=task.rollback,
    )


def run_matches(tasks: Sequence[MatchTask], workers: int = 1, quiet: bool = False) -> List[Trajectory]:
    return parallel_map(run_match_task, tasks, workers, desc="matching", quiet=quiet)


def shift_sweep_taus(tau_max: int) -> List[int]:
    """0 followed by 2^0, 2^1, ... up to tau_max."""
    top = int(math.floor(math.log2(tau_max))) if tau_max >= 1 else -1
    return [0] + [2 ** n for n in range(top + 1)]


def matching_summary(trajectories: Sequence[Trajectory]) -> Dict[str, object]:
    finals = [t.final_distance for t in trajectories]
    return {
        "runs": len(trajectories),
        "final_distances": finals,
        "mean_final_distance": float(np.mean(finals)) if finals else None,
        "reductions": [t.reduction() for t in trajectories],
        "stop_reasons": [t.stop_reason for t in trajectories],
    }


# --- Time-displaced vs. rate-displaced chirps ---

def chirp_pairs(
    gammas: Sequence[float],
    cfg: PipelineConfig,
    delay_samples: int = 2 ** 10,
    rate_ratio: float = 2.0,
) -> List[Dict[str, object]]:
    """
    Distances between two glissandi for each chirp rate

    ``displaced``: the same rate, one delayed by ``delay_samples``.
    ``rate``: overlapping, rates gamma and rate_ratio * gamma.
    """
    sr = cfg.synth.sample_rate
    rows = []
    for gamma in gammas:
        reference = normalize(glissando(gamma, cfg.synth), cfg.synth.normalization)
        cases = {
            "displaced": normalize(glissando(gamma, cfg.synth, delay=delay_samples / sr), cfg.synth.normalization),
            "rate": normalize(glissando(gamma * rate_ratio, cfg.synth), cfg.synth.normalization),
        }
        for case, other in cases.items():
            rows.append({
                "gamma": float(gamma),
                "case": case,
                "jtfs": jtfs_distance(reference, other, cfg),
                "mss": mss_distance(reference, other, cfg),
            })
    return rows
