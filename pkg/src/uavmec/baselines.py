"""Scripted comparison trajectories: uniformly random moves and a shared circle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .env import TWO_PI, UavAction


def random_policy(rng: np.random.Generator, cfg: SimConfig) -> UavAction:
    angle = rng.uniform(0.0, TWO_PI)
    if angle >= TWO_PI:  # uniform() may return the upper bound after rounding
        angle = 0.0
    return UavAction(angle, rng.uniform(0.0, cfg.d_max))


@dataclass(frozen=True)
class CirclePlan:
    center: tuple[float, float]
    radius: float
    angular_step: float
    phases: tuple[float, ...]

    def target(self, uav_index: int, t: int) -> np.ndarray:
        theta = self.phases[uav_index] + t * self.angular_step
        return np.array([
            self.center[0] + self.radius * math.cos(theta),
            self.center[1] + self.radius * math.sin(theta),
        ])


def circle_plan(ue_pos, start_poses, cfg: SimConfig, phases=None) -> CirclePlan:
    """One circle of radius ``R_max`` about the UE centroid, flown twice per episode.

    Each UAV's phase is the bearing of its start position from the centre
    unless ``phases`` is given.
    """
    center = np.asarray(ue_pos, dtype=float).mean(axis=0)
    if phases is None:
        phases = [math.atan2(p[1] - center[1], p[0] - center[0]) % TWO_PI for p in start_poses]
    return CirclePlan(
        center=(float(center[0]), float(center[1])),
        radius=cfg.R_max,
        angular_step=2.0 * TWO_PI / cfg.horizon_T,
        phases=tuple(float(p) for p in phases),
    )


def circle_policy(plan: CirclePlan, uav_index: int, pose, t: int, cfg: SimConfig) -> UavAction:
    """Fly straight at this slot's point on the circle, at most ``d_max``.

    ``t`` is the 1-based index of the slot being executed, so after ``T``
    slots the target has swept ``4 pi``.
    """
    tgt = plan.target(uav_index, t)
    dx, dy = tgt[0] - pose[0], tgt[1] - pose[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return UavAction(0.0, 0.0)
    angle = math.atan2(dy, dx) % TWO_PI
    if angle >= TWO_PI:
        angle = 0.0
    return UavAction(angle, min(cfg.d_max, dist))
