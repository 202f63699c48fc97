"""Multi-UAV MEC world: kinematics, task arrivals, offloading and rewards per slot."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .config import SimConfig
from .offload import decide_all
from .physics import (  # noqa: F401  re-exported for callers of the env module
    data_rate,
    exec_time,
    horizontal_dist,
    local_cpu,
    local_energy,
    offload_energy,
    offload_time,
)

TWO_PI = 2.0 * math.pi


class ContractError(ValueError):
    """An argument broke the documented preconditions."""


class HorizonError(RuntimeError):
    pass


@dataclass(frozen=True)
class Task:
    data_bits: float
    cycles: float

    def __post_init__(self):
        if not (self.data_bits > 0 and self.cycles > 0):
            raise ContractError("task data and cycles must be positive")


@dataclass(frozen=True)
class UavAction:
    angle: float
    dist: float

    def check(self, cfg: SimConfig) -> None:
        if not 0.0 <= self.angle < TWO_PI:
            raise ContractError(f"angle {self.angle!r} outside [0, 2pi)")
        if not 0.0 <= self.dist <= cfg.d_max:
            raise ContractError(f"distance {self.dist!r} outside [0, d_max]")


@dataclass
class WorldState:
    ue_pos: np.ndarray          # (N, 2), fixed for a deployment
    poses: np.ndarray           # (M, 2)
    t: int
    served_counts: np.ndarray   # (N,) slots in which each UE offloaded
    load_history: np.ndarray    # (M,) cumulative relative load per UAV
    task_bits: np.ndarray       # (N,) current slot
    task_cycles: np.ndarray     # (N,)

    @property
    def tasks(self) -> list[Task]:
        return [Task(float(d), float(f)) for d, f in zip(self.task_bits, self.task_cycles)]

    def copy(self) -> "WorldState":
        return WorldState(
            self.ue_pos, self.poses.copy(), self.t, self.served_counts.copy(),
            self.load_history.copy(), self.task_bits.copy(), self.task_cycles.copy(),
        )


@dataclass
class StepRecord:
    t: int
    poses: list
    violations: list
    decisions: list
    energies: list
    loads: list
    f_u: float
    f_e: float
    rewards: list
    objective: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {
            "t": self.t, "poses": self.poses, "violations": self.violations,
            "decisions": self.decisions, "energies": self.energies, "loads": self.loads,
            "f_u": self.f_u, "f_e": self.f_e, "rewards": self.rewards,
            "objective": self.objective,
        }
        d.update(self.extra)
        return d


def spawn_ues(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, cfg.side_len_l_max, size=(cfg.n_ues, 2))


def draw_tasks(cfg: SimConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = cfg.data_range_bits
    bits = rng.uniform(lo, hi, size=cfg.n_ues)
    density = rng.uniform(cfg.density_range[0], cfg.density_range[1], size=cfg.n_ues)
    return bits, bits * density


def spawn_tasks(cfg: SimConfig, rng: np.random.Generator) -> list[Task]:
    bits, cycles = draw_tasks(cfg, rng)
    return [Task(float(d), float(f)) for d, f in zip(bits, cycles)]


def _in_area(p, cfg: SimConfig) -> bool:
    return 0.0 <= p[0] <= cfg.side_len_l_max and 0.0 <= p[1] <= cfg.side_len_l_max


def _candidate(pose, action: UavAction) -> np.ndarray:
    return np.array([
        pose[0] + action.dist * math.cos(action.angle),
        pose[1] + action.dist * math.sin(action.angle),
    ])


def uav_step(pose, action: UavAction, other_poses, cfg: SimConfig):
    """Move one UAV; return ``(new_pose, violated)``.

    ``other_poses`` are the positions the other UAVs are checked against
    (their candidates and current positions).  On a violation the UAV stays
    where it is.
    """
    action.check(cfg)
    pose = np.asarray(pose, dtype=float)
    cand = _candidate(pose, action)
    if not _in_area(cand, cfg):
        return pose.copy(), True
    for other in other_poses:
        if math.hypot(cand[0] - other[0], cand[1] - other[1]) < cfg.R_u:
            return pose.copy(), True
    return cand, False


def as_actions(joint_action) -> list[UavAction]:
    if isinstance(joint_action, np.ndarray):
        return [UavAction(float(a), float(d)) for a, d in joint_action.reshape(-1, 2)]
    return [a if isinstance(a, UavAction) else UavAction(float(a[0]), float(a[1])) for a in joint_action]


def move_uavs(poses, joint_action, cfg: SimConfig):
    """Simultaneous single-pass move of all UAVs.

    A candidate is rejected when it leaves the area or comes within ``R_u``
    of another UAV's candidate or current position.  Rejected UAVs hold
    position; there is no second pass.
    """
    actions = as_actions(joint_action)
    if len(actions) != len(poses):
        raise ContractError("one action per UAV required")
    for a in actions:
        a.check(cfg)
    cands = [_candidate(p, a) for p, a in zip(poses, actions)]
    new = np.empty_like(np.asarray(poses, dtype=float))
    viol = np.zeros(len(poses), dtype=bool)
    for m, (pose, action) in enumerate(zip(poses, actions)):
        others = [c for k, c in enumerate(cands) if k != m]
        others += [p for k, p in enumerate(poses) if k != m]
        new[m], viol[m] = uav_step(pose, action, others, cfg)
    return new, viol


def reset_world(cfg: SimConfig, ue_pos: np.ndarray, rng: np.random.Generator) -> WorldState:
    bits, cycles = draw_tasks(cfg, rng)
    return WorldState(
        ue_pos=ue_pos,
        poses=np.array(cfg.initial_poses(), dtype=float),
        t=0,
        served_counts=np.zeros(cfg.n_ues, dtype=np.int64),
        load_history=np.zeros(cfg.n_uavs),
        task_bits=bits,
        task_cycles=cycles,
    )


def env_step(world: WorldState, joint_action, cfg: SimConfig, rng: np.random.Generator):
    """Advance one slot.  Returns ``(next_world, rewards, record)``."""
    if world.t >= cfg.horizon_T:
        raise HorizonError(f"episode already finished at t={world.t}")
    poses, viol = move_uavs(world.poses, joint_action, cfg)

    targets, energies, _, _ = decide_all(world.ue_pos, world.task_bits, world.task_cycles, poses, cfg)
    offloaded = targets > 0
    loads = np.bincount(targets, minlength=cfg.n_uavs + 1)[1:] / cfg.n_ues

    served = world.served_counts + offloaded
    load_hist = world.load_history + loads
    f_u = metrics.uav_load_fairness(load_hist)
    f_e = metrics.ue_service_fairness(served)
    rewards = metrics.reward(f_u, f_e, energies, viol, cfg)

    t = world.t + 1
    if t < cfg.horizon_T:
        bits, cycles = draw_tasks(cfg, rng)
    else:
        bits, cycles = world.task_bits, world.task_cycles
    nxt = WorldState(world.ue_pos, poses, t, served, load_hist, bits, cycles)
    record = StepRecord(
        t=t,
        poses=poses.tolist(),
        violations=viol.tolist(),
        decisions=targets.tolist(),
        energies=energies.tolist(),
        loads=loads.tolist(),
        f_u=f_u,
        f_e=f_e,
        rewards=rewards.tolist(),
        objective=metrics.objective_term(f_u, f_e, energies),
    )
    return nxt, rewards, record


def observe(world: WorldState, m: int, cfg: SimConfig) -> np.ndarray:
    """Private observation of agent ``m``.

    Layout: own ``[x, y] / l``; distances to the other UAVs in index order
    ``/ l``; per-UE served counts ``/ max(t, 1)``; per-UAV cumulative loads
    ``/ max(t, 1)``.
    """
    if not 0 <= m < cfg.n_uavs:
        raise ContractError(f"no agent {m}")
    scale = cfg.side_len_l_max
    steps = max(world.t, 1)
    own = world.poses[m]
    others = np.delete(world.poses, m, axis=0)
    rel = np.hypot(others[:, 0] - own[0], others[:, 1] - own[1])
    return np.concatenate([
        own / scale,
        rel / scale,
        world.served_counts / steps,
        world.load_history / steps,
    ])


def full_state(world: WorldState, cfg: SimConfig) -> np.ndarray:
    return np.concatenate([observe(world, m, cfg) for m in range(cfg.n_uavs)])
