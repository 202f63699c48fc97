"""Simulation and training configuration.

Defaults are the full-scale scenario (50 UEs, 20 slots, 100 m square,
10 MHz, 0.1 W, -90 dBm noise, ...).  Configs are stored as a
plain ``key = value`` file with a single ``[sim]`` section, e.g.::

    [sim]
    n_ues = 20
    n_uavs = 2
    hidden = 64, 64
    data_range = 10, 14
    data_unit = kilobyte

Tuple-valued keys are comma separated.  Unknown keys are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

BITS_PER_UNIT = {"kilobyte": 8000.0, "kilobit": 1000.0}

# Fields that only steer a run, not the world or the network shapes.
RUN_CONTROL_FIELDS = frozenset({"episodes_e_max", "checkpoint_every"})


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    # world
    n_ues: int = 50
    n_uavs: int = 3
    horizon_T: int = 20
    side_len_l_max: float = 100.0
    altitude_H: float = 50.0
    d_max: float = 20.0
    R_max: float = 20.0
    R_u: float = 1.0
    bandwidth_B: float = 10e6
    tx_power_P_n: float = 0.1
    noise_sigma2: float = 1e-12
    g0: float = 1.42e-4
    G0: float = 2.2846
    k_n: float = 1e-28
    v_n: float = 3.0
    T_max: float = 1.0
    data_range: tuple[float, float] = (10.0, 14.0)
    data_unit: str = "kilobyte"
    density_range: tuple[float, float] = (1800.0, 2000.0)
    penalty_p_m: float = 10.0
    init_poses: tuple[float, ...] = (10.0, 10.0, 90.0, 90.0, 10.0, 90.0, 90.0, 10.0)
    # learning
    hidden: tuple[int, ...] = (400, 300, 200, 200)
    gamma: float = 0.95
    tau: float = 0.01
    lr_actor: float = 3e-5
    lr_critic: float = 1e-4
    batch_K: int = 256
    buffer_cap: int = 100_000
    eps_priority: float = 1e-3
    beta_priority: float = 0.6
    mu_is: float = 0.4
    new_priority: str = "max"
    noise_std: float = 1.0
    noise_decay: float = 0.9995
    reward_scale: float = 1e-3
    learn_start: int = 0
    actor_reg: float = 1e-3
    # run control
    episodes_e_max: int = 3000
    checkpoint_every: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        self.validate()

    @property
    def data_range_bits(self) -> tuple[float, float]:
        scale = BITS_PER_UNIT[self.data_unit]
        return (self.data_range[0] * scale, self.data_range[1] * scale)

    @property
    def rho(self) -> float:
        return self.g0 * self.G0 / self.noise_sigma2

    @property
    def obs_len(self) -> int:
        return 2 + (self.n_uavs - 1) + self.n_ues + self.n_uavs

    @property
    def state_len(self) -> int:
        return self.n_uavs * self.obs_len

    def initial_poses(self) -> list[tuple[float, float]]:
        pts = list(zip(self.init_poses[0::2], self.init_poses[1::2]))
        return pts[: self.n_uavs]

    def validate(self) -> None:
        positive = [
            "n_ues", "n_uavs", "horizon_T", "side_len_l_max", "altitude_H", "d_max",
            "R_max", "R_u", "bandwidth_B", "tx_power_P_n", "noise_sigma2", "g0", "G0",
            "T_max", "batch_K", "buffer_cap", "eps_priority", "lr_actor", "lr_critic",
            "reward_scale",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        if self.k_n < 0 or self.v_n < 1:
            raise ConfigError("k_n must be >= 0 and v_n >= 1")
        if not self.R_u < self.R_max:
            raise ConfigError("R_u must be smaller than R_max")
        if not self.d_max <= self.side_len_l_max:
            raise ConfigError("d_max must not exceed the side length")
        for name in ("data_range", "density_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} must satisfy 0 < min <= max")
        if self.data_unit not in BITS_PER_UNIT:
            raise ConfigError(f"data_unit must be one of {sorted(BITS_PER_UNIT)}")
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma must lie in (0, 1)")
        if not 0 < self.tau <= 1:
            raise ConfigError("tau must lie in (0, 1]")
        if not 0 < self.noise_decay <= 1 or self.noise_std < 0:
            raise ConfigError("noise_decay must lie in (0, 1] and noise_std >= 0")
        if self.new_priority not in ("max", "td"):
            raise ConfigError("new_priority must be 'max' or 'td'")
        if len(self.init_poses) % 2 or len(self.init_poses) // 2 < self.n_uavs:
            raise ConfigError("init_poses must hold an (x, y) pair for every UAV")
        for x in self.init_poses:
            if not 0 <= x <= self.side_len_l_max:
                raise ConfigError("init_poses must lie inside the area")
        if not self.hidden or any(w <= 0 for w in self.hidden):
            raise ConfigError("hidden widths must be positive")
        if self.actor_reg < 0:
            raise ConfigError("actor_reg must be non-negative")
        if self.episodes_e_max < 0 or self.learn_start < 0:
            raise ConfigError("episodes_e_max and learn_start must be non-negative")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def config_hash(self) -> str:
        """Hash of everything that fixes the world and network shapes."""
        payload = {k: v for k, v in self.to_dict().items() if k not in RUN_CONTROL_FIELDS}
        blob = json.dumps(payload, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _coerce(name: str, raw: str):
    f = SimConfig.__dataclass_fields__[name]
    default = f.default
    raw = raw.strip()
    if isinstance(default, tuple):
        elem = type(default[0]) if default else float
        return tuple(elem(float(p)) if elem is int else elem(p) for p in raw.split(",") if p.strip())
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(float(raw))
    if isinstance(default, float):
        return float(raw)
    return raw


def load_config(path: str | Path, **overrides) -> SimConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case sensitive (R_max, G0, ...)
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_section("sim"):
        raise ConfigError(f"{path}: missing [sim] section")
    values = {}
    for key, raw in parser.items("sim"):
        if key not in SimConfig.__dataclass_fields__:
            raise ConfigError(f"{path}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SimConfig(**values)


def dump_config(cfg: SimConfig, path: str | Path) -> None:
    lines = ["[sim]"]
    for key, value in cfg.to_dict().items():
        if isinstance(value, tuple):
            value = ", ".join(repr(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def full_scale() -> SimConfig:
    return SimConfig()


def desk_scale(**changes) -> SimConfig:
    """Small world and nets used for quick runs and the learning acceptance check.

    The smaller nets and 10x shorter schedule train with 10x larger step sizes.
    """
    base = dict(n_ues=20, n_uavs=2, hidden=(64, 64), batch_K=64, episodes_e_max=500,
                lr_actor=3e-4, lr_critic=1e-3)
    base.update(changes)
    return SimConfig(**base)


__all__ = [
    "SimConfig", "ConfigError", "load_config", "dump_config", "full_scale", "desk_scale",
    "dbm_to_watts", "BITS_PER_UNIT",
]
