"""Channel, timing and energy formulas.

Every function accepts scalars or numpy arrays and broadcasts.
"""
from __future__ import annotations

import numpy as np

from .config import SimConfig


def horizontal_dist(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.hypot(a[..., 0] - b[..., 0], a[..., 1] - b[..., 1])
    return float(d) if d.ndim == 0 else d


def data_rate(R, cfg: SimConfig):
    """Uplink rate in bit/s at horizontal distance ``R`` from the UAV.

    ``B * log2(1 + rho * P / (H^2 + R^2))`` with ``rho = g0 * G0 / sigma^2``.
    """
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise ValueError("horizontal distance must be non-negative")
    snr = cfg.rho * cfg.tx_power_P_n / (cfg.altitude_H**2 + R**2)
    r = cfg.bandwidth_B * np.log2(1.0 + snr)
    return float(r) if r.ndim == 0 else r


def _quotient(num, den, what: str):
    den = np.asarray(den, dtype=float)
    if np.any(den <= 0):
        raise ValueError(f"{what} must be strictly positive")
    q = np.asarray(num, dtype=float) / den
    return float(q) if q.ndim == 0 else q


def offload_time(data_bits, rate):
    return _quotient(data_bits, rate, "rate")


def exec_time(cycles, cpu_hz):
    return _quotient(cycles, cpu_hz, "cpu frequency")


def local_cpu(cycles, cfg: SimConfig):
    """Slowest local clock that still meets the slot deadline."""
    return np.asarray(cycles, dtype=float) / cfg.T_max


def local_energy(cycles, cpu_hz, cfg: SimConfig):
    # k f^v * (F / f), written so F = 0 gives exactly 0
    cpu_hz = np.asarray(cpu_hz, dtype=float)
    if np.any(cpu_hz <= 0):
        raise ValueError("cpu frequency must be strictly positive")
    e = cfg.k_n * cpu_hz ** (cfg.v_n - 1.0) * np.asarray(cycles, dtype=float)
    return float(e) if e.ndim == 0 else e


def offload_energy(tx_time, cfg: SimConfig):
    tx_time = np.asarray(tx_time, dtype=float)
    if np.any(tx_time < 0):
        raise ValueError("transmission time must be non-negative")
    e = cfg.tx_power_P_n * tx_time
    return float(e) if e.ndim == 0 else e
