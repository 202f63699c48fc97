"""Training loop, evaluation, baseline runs, metric export and checkpoints."""
from __future__ import annotations

import csv
import json
import logging
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import maddpg
from .baselines import circle_plan, circle_policy, random_policy
from .config import SimConfig, dump_config
from .env import StepRecord, UavAction, WorldState, env_step, full_state, observe, reset_world, spawn_ues
from .neural import Adam, NonFiniteError, load_net, save_net
from .rng import stream

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1
METRICS_FIXED = ("episode", "f_e", "f_u", "energy_J", "seconds", "seed")

# a controller maps the current world to one action per UAV
Controller = Callable[[WorldState], Sequence[UavAction]]


class CheckpointMismatch(RuntimeError):
    pass


class TrainingAborted(RuntimeError):
    def __init__(self, msg: str, checkpoint: Path | None):
        super().__init__(msg)
        self.checkpoint = checkpoint


@dataclass
class RunRecord:
    episode: int
    rewards: tuple[float, ...]
    f_e: float
    f_u: float
    energy_J: float
    seconds: float
    seed: int

    def deterministic(self) -> tuple:
        """Everything except wall-clock time."""
        return (self.episode, self.rewards, self.f_e, self.f_u, self.energy_J, self.seed)


@dataclass
class TrainResult:
    records: list[RunRecord]
    agents: list[maddpg.Agent]
    checkpoint: Path | None = None


@dataclass
class EpisodeResult:
    rewards: np.ndarray
    records: list[StepRecord]
    world: WorldState
    served_counts: np.ndarray = field(default=None)

    @property
    def energy(self) -> float:
        return float(sum(sum(r.energies) for r in self.records))


def deployment(cfg: SimConfig) -> np.ndarray:
    """UE layout for a seed; shared by training, evaluation and baselines."""
    return spawn_ues(cfg, stream(cfg.seed, "layout"))


def run_episode(cfg: SimConfig, ue_pos: np.ndarray, controller: Controller,
                task_rng: np.random.Generator) -> EpisodeResult:
    world = reset_world(cfg, ue_pos, task_rng)
    total = np.zeros(cfg.n_uavs)
    records = []
    while world.t < cfg.horizon_T:
        actions = controller(world)
        world, rewards, rec = env_step(world, actions, cfg, task_rng)
        rec.extra["served_counts"] = world.served_counts.tolist()
        total += rewards
        records.append(rec)
    return EpisodeResult(total, records, world, world.served_counts.copy())


# --------------------------------------------------------------------- training

def train(cfg: SimConfig, out_dir: str | Path | None = None,
          progress: Callable[[RunRecord], None] | None = None) -> TrainResult:
    """Run ``episodes_e_max`` exploring episodes with a learning step per slot."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        dump_config(cfg, out / "config.ini")
    ue_pos = deployment(cfg)
    task_rng = stream(cfg.seed, "train-tasks")
    noise_rng = stream(cfg.seed, "exploration")
    replay_rng = stream(cfg.seed, "replay")
    agents = maddpg.make_agents(cfg, stream(cfg.seed, "init"))

    records: list[RunRecord] = []
    ckpt = None
    for ep in range(cfg.episodes_e_max):
        t0 = time.perf_counter()
        try:
            result = _train_episode(cfg, agents, ue_pos, task_rng, noise_rng, replay_rng)
        except NonFiniteError as exc:
            log.error("episode %d aborted: %s", ep, exc)
            if out is not None:
                export_metrics(records, out / "train_log.csv")
            raise TrainingAborted(f"non-finite values in episode {ep}: {exc}", ckpt) from exc
        last = result.records[-1]
        rec = RunRecord(ep, tuple(float(r) for r in result.rewards), last.f_e, last.f_u,
                        result.energy, time.perf_counter() - t0, cfg.seed)
        records.append(rec)
        if progress is not None:
            progress(rec)
        if out is not None and cfg.checkpoint_every and (ep + 1) % cfg.checkpoint_every == 0:
            ckpt = save_checkpoint(agents, cfg, out / "checkpoint", episode=ep + 1)
            export_metrics(records, out / "train_log.csv")
    if out is not None:
        ckpt = save_checkpoint(agents, cfg, out / "checkpoint", episode=cfg.episodes_e_max)
        export_metrics(records, out / "train_log.csv")
    return TrainResult(records, agents, ckpt)


def _train_episode(cfg, agents, ue_pos, task_rng, noise_rng, replay_rng) -> EpisodeResult:
    world = reset_world(cfg, ue_pos, task_rng)
    total = np.zeros(cfg.n_uavs)
    records = []
    state = full_state(world, cfg)
    while world.t < cfg.horizon_T:
        actions, us = [], []
        for a in agents:
            act, u = maddpg.select_action(a, maddpg.obs_slice(state, a.index, cfg), True, noise_rng, cfg)
            actions.append(act)
            us.append(u)
        world, rewards, rec = env_step(world, actions, cfg, task_rng)
        next_state = full_state(world, cfg)
        maddpg.push_transition(agents, state, np.concatenate(us), rewards, next_state, cfg)
        maddpg.train_step(agents, cfg, replay_rng)
        total += rewards
        records.append(rec)
        state = next_state
    return EpisodeResult(total, records, world, world.served_counts.copy())


# ------------------------------------------------------------------- controllers

def mat_controller(agents: list[maddpg.Agent], cfg: SimConfig) -> Controller:
    """Greedy decentralised execution: agent ``m`` sees only ``observe(world, m)``."""
    def act(world: WorldState):
        return [maddpg.select_action(a, observe(world, a.index, cfg), False, None, cfg)[0] for a in agents]
    return act


def random_controller(cfg: SimConfig, rng: np.random.Generator) -> Controller:
    def act(world: WorldState):
        return [random_policy(rng, cfg) for _ in range(cfg.n_uavs)]
    return act


def circle_controller(cfg: SimConfig, ue_pos: np.ndarray, phases=None) -> Controller:
    plan = circle_plan(ue_pos, cfg.initial_poses(), cfg, phases)

    def act(world: WorldState):
        return [circle_policy(plan, m, world.poses[m], world.t + 1, cfg) for m in range(cfg.n_uavs)]
    return act


# -------------------------------------------------------------------- evaluation

def evaluate(checkpoint: str | Path, cfg: SimConfig, episodes: int,
             out_dir: str | Path | None = None) -> dict:
    agents = load_checkpoint(checkpoint, cfg)
    return evaluate_agents(agents, cfg, episodes, out_dir)


def evaluate_agents(agents: list[maddpg.Agent], cfg: SimConfig, episodes: int,
                    out_dir: str | Path | None = None) -> dict:
    return _run_policy("mat", lambda ue: mat_controller(agents, cfg), cfg, episodes, out_dir)


def run_baseline(kind: str, cfg: SimConfig, episodes: int, out_dir: str | Path | None = None) -> dict:
    if kind == "random":
        rng = stream(cfg.seed, "baseline-random")
        factory = lambda ue: random_controller(cfg, rng)  # noqa: E731
    elif kind == "circle":
        factory = lambda ue: circle_controller(cfg, ue)  # noqa: E731
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    return _run_policy(kind, factory, cfg, episodes, out_dir)


def _run_policy(kind: str, factory, cfg: SimConfig, episodes: int, out_dir) -> dict:
    """Shared evaluation pipeline; every policy sees the same layout and task draws."""
    ue_pos = deployment(cfg)
    controller = factory(ue_pos)
    task_rng = stream(cfg.seed, "eval-tasks")
    results = [run_episode(cfg, ue_pos, controller, task_rng) for _ in range(episodes)]
    summary = summarize(kind, cfg, ue_pos, results)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trajectories(results, out / f"{kind}_trajectory.jsonl")
        (out / f"{kind}_summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def summarize(kind: str, cfg: SimConfig, ue_pos: np.ndarray, results: list[EpisodeResult]) -> dict:
    T = cfg.horizon_T
    per_agent = np.array([r.rewards for r in results])
    f_e = np.array([[rec.f_e for rec in r.records] for r in results])
    f_u = np.array([[rec.f_u for rec in r.records] for r in results])
    energy = np.array([[sum(rec.energies) for rec in r.records] for r in results])
    objective = np.array([sum(rec.objective for rec in r.records) for r in results])
    violations = np.array([sum(sum(rec.violations) for rec in r.records) for r in results])
    return {
        "kind": kind,
        "seed": cfg.seed,
        "episodes": len(results),
        "mean_reward": float(per_agent.mean()),
        "per_agent_reward": per_agent.mean(axis=0).tolist(),
        "f_e_T": float(f_e[:, -1].mean()),
        "f_u_T": float(f_u[:, -1].mean()),
        "energy_J": float(energy.sum(axis=1).mean()),
        "mean_ue_energy_J": float(energy.mean() / cfg.n_ues),
        "objective": float(objective.mean()),
        "violations": float(violations.mean()),
        "f_e_curve": f_e.mean(axis=0).tolist(),
        "f_u_curve": f_u.mean(axis=0).tolist(),
        "energy_curve": energy.mean(axis=0).tolist(),
        "heatmap": results[-1].served_counts.tolist() if results else [],
        "ue_pos": np.asarray(ue_pos).tolist(),
        "horizon_T": T,
    }


# ---------------------------------------------------------------------- exports

def write_trajectories(results: list[EpisodeResult], path: str | Path) -> None:
    with open(path, "w") as fh:
        for ep, res in enumerate(results):
            for rec in res.records:
                row = {"episode": ep}
                row.update(rec.to_json())
                fh.write(json.dumps(row) + "\n")


def read_trajectories(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def metrics_header(n_agents: int) -> list[str]:
    return ["episode", *[f"reward_{m}" for m in range(n_agents)], "f_e", "f_u", "energy_J", "seconds", "seed"]


def export_metrics(records: Sequence[RunRecord], path: str | Path) -> None:
    """CSV, one row per episode.  Energies carry 12 significant digits, other floats full precision."""
    n = len(records[0].rewards) if records else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(metrics_header(n))
        for r in records:
            w.writerow([r.episode, *[repr(x) for x in r.rewards], repr(r.f_e), repr(r.f_u),
                        f"{r.energy_J:.12g}", f"{r.seconds:.6f}", r.seed])


def read_metrics(path: str | Path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = sum(1 for h in header if h.startswith("reward_"))
    if header != metrics_header(n):
        raise ValueError(f"{path}: unexpected header {header}")
    out = []
    for row in body:
        out.append(RunRecord(
            episode=int(row[0]),
            rewards=tuple(float(x) for x in row[1:1 + n]),
            f_e=float(row[1 + n]),
            f_u=float(row[2 + n]),
            energy_J=float(row[3 + n]),
            seconds=float(row[4 + n]),
            seed=int(row[5 + n]),
        ))
    return out


# ------------------------------------------------------------------ checkpoints

NET_ROLES = ("actor", "critic", "target_actor", "target_critic")


def save_checkpoint(agents: list[maddpg.Agent], cfg: SimConfig, directory: str | Path,
                    episode: int = 0) -> Path:
    """Write every agent's four networks plus ``manifest.json``.

    The new checkpoint is assembled next to the old one and swapped in, so
    an interrupted save leaves the previous checkpoint intact.
    """
    directory = Path(directory)
    tmp = directory.with_name(directory.name + ".tmp")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "config_hash": cfg.config_hash(),
        "episode": episode,
        "seed": cfg.seed,
        "agents": [],
    }
    for a in agents:
        files = {}
        for role in NET_ROLES:
            name = f"agent{a.index}_{role}.bin"
            save_net(getattr(a, role), tmp / name)
            files[role] = name
        manifest["agents"].append({"index": a.index, "sigma": a.sigma, **files})
    (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2))
    dump_config(cfg, tmp / "config.ini")
    old = directory.with_name(directory.name + ".old")
    if directory.exists():
        directory.rename(old)
    tmp.rename(directory)
    if old.exists():
        shutil.rmtree(old)
    return directory


def load_checkpoint(directory: str | Path, cfg: SimConfig) -> list[maddpg.Agent]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointMismatch(f"{directory}: unsupported checkpoint format {manifest.get('format')}")
    if manifest["config_hash"] != cfg.config_hash():
        raise CheckpointMismatch(
            f"{directory}: config hash {manifest['config_hash']} does not match {cfg.config_hash()}"
        )
    agents = maddpg.make_agents(cfg.replace(buffer_cap=1), np.random.default_rng(0))
    for entry in manifest["agents"]:
        a = agents[entry["index"]]
        for role in NET_ROLES:
            setattr(a, role, load_net(directory / entry[role]))
        a.sigma = entry["sigma"]
        a.actor_opt = Adam(a.actor.params, cfg.lr_actor)
        a.critic_opt = Adam(a.critic.params, cfg.lr_critic)
    maddpg.check_agents(agents, cfg)
    return agents
