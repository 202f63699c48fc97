"""Least-energy placement of each UE task given the UAV positions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .physics import data_rate, local_cpu, local_energy

LOCAL = 0


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class OffloadDecision:
    """Where one task runs.  ``target`` 0 is local, ``m >= 1`` is UAV ``m - 1``."""

    target: int
    energy: float
    alloc_cpu: float
    tx_time: float


def alloc_cpu(cycles, tx_time, cfg: SimConfig):
    """UAV clock that lets execution fill the rest of the slot after upload."""
    tx_time = np.asarray(tx_time, dtype=float)
    if np.any(tx_time >= cfg.T_max):
        raise InfeasibleError("upload alone exceeds the slot deadline")
    f = np.asarray(cycles, dtype=float) / (cfg.T_max - tx_time)
    return float(f) if f.ndim == 0 else f


def decide_all(ue_pos, data_bits, cycles, uav_poses, cfg: SimConfig):
    """Vectorised placement for ``N`` UEs against ``M`` UAVs.

    Returns ``(targets, energy, alloc, tx_time)``, each of length ``N``.
    Offload candidates must be within ``R_max`` and finish uploading
    before ``T_max``; the local option is always feasible.
    """
    ue_pos = np.asarray(ue_pos, dtype=float).reshape(-1, 2)
    uav_poses = np.asarray(uav_poses, dtype=float).reshape(-1, 2)
    data_bits = np.asarray(data_bits, dtype=float).reshape(-1)
    cycles = np.asarray(cycles, dtype=float).reshape(-1)

    diff = ue_pos[:, None, :] - uav_poses[None, :, :]
    R = np.hypot(diff[..., 0], diff[..., 1])
    tx = data_bits[:, None] / data_rate(R, cfg)
    feasible = (R <= cfg.R_max) & (tx < cfg.T_max)

    f_loc = local_cpu(cycles, cfg)
    costs = np.empty((len(ue_pos), len(uav_poses) + 1))
    costs[:, 0] = local_energy(cycles, f_loc, cfg)
    costs[:, 1:] = np.where(feasible, cfg.tx_power_P_n * tx, np.inf)

    # argmin returns the first minimum: local first, then lowest UAV index
    targets = np.argmin(costs, axis=1)
    rows = np.arange(len(targets))
    energy = costs[rows, targets]
    off = targets > 0
    tx_time = np.zeros(len(targets))
    tx_time[off] = tx[rows[off], targets[off] - 1]
    alloc = f_loc.copy()
    alloc[off] = cycles[off] / (cfg.T_max - tx_time[off])
    return targets, energy, alloc, tx_time


def choose_offload(ue_pos, task, uav_poses, cfg: SimConfig) -> OffloadDecision:
    targets, energy, alloc, tx = decide_all(ue_pos, task.data_bits, task.cycles, uav_poses, cfg)
    return OffloadDecision(int(targets[0]), float(energy[0]), float(alloc[0]), float(tx[0]))


def brute_force_decision(ue_pos, task, uav_poses, cfg: SimConfig) -> OffloadDecision:
    """Scalar reference: try every placement one by one with plain floats.

    Used as an independent check on :func:`choose_offload`.
    """
    f_loc = task.cycles / cfg.T_max
    best = OffloadDecision(LOCAL, cfg.k_n * f_loc ** (cfg.v_n - 1.0) * task.cycles, f_loc, 0.0)
    x, y = float(ue_pos[0]), float(ue_pos[1])
    for m, (ux, uy) in enumerate(uav_poses, start=1):
        R = math.hypot(x - float(ux), y - float(uy))
        if R > cfg.R_max:
            continue
        snr = cfg.g0 * cfg.G0 / cfg.noise_sigma2 * cfg.tx_power_P_n / (cfg.altitude_H**2 + R**2)
        rate = cfg.bandwidth_B * math.log2(1.0 + snr)
        tx = task.data_bits / rate
        if tx >= cfg.T_max:
            continue
        f = task.cycles / (cfg.T_max - tx)
        # the allocated clock finishes exactly at the deadline
        if tx + task.cycles / f > cfg.T_max * (1 + 1e-12):
            continue
        energy = cfg.tx_power_P_n * tx
        if energy < best.energy:
            best = OffloadDecision(m, energy, f, tx)
    return best
