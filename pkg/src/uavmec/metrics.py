"""Fairness indices and the per-agent reward."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig


@dataclass(frozen=True)
class FairnessSnapshot:
    f_u: float
    f_e: float
    mean_energy: float
    loads: tuple[float, ...]


def jain(values) -> float:
    """Jain's index ``(sum v)^2 / (n * sum v^2)``; 0 for an all-zero vector."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise ValueError("jain() needs at least one value")
    if np.any(v < 0):
        raise ValueError("jain() is defined for non-negative values only")
    top = float(v.max())
    if top == 0.0:
        return 0.0
    v = v / top  # keeps tiny or huge inputs away from under/overflow
    sq = float(np.dot(v, v))
    s = float(v.sum())
    return min(1.0, s * s / (v.size * sq))


def uav_load_fairness(load_history) -> float:
    """Fairness of cumulative relative UE-load across UAVs."""
    return jain(load_history)


def ue_service_fairness(served_counts) -> float:
    """Fairness of how often each UE has been served by any UAV."""
    return jain(served_counts)


def reward(f_u: float, f_e: float, energies, violations, cfg: SimConfig) -> np.ndarray:
    """Shared fairness-per-energy term minus a per-UAV penalty.

    ``energies`` are the realised per-UE energies of the slot (local or
    offload), ``violations`` a boolean per UAV.
    """
    mean_e = float(np.mean(energies))
    if not mean_e > 0:
        raise ValueError("mean UE energy must be positive")
    shared = f_u * f_e / mean_e
    return shared - cfg.penalty_p_m * np.asarray(violations, dtype=float)


def objective_term(f_u: float, f_e: float, energies) -> float:
    """One slot's contribution to the system objective (total, not mean, energy)."""
    return f_u * f_e / float(np.sum(energies))
