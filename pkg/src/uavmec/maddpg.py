"""Centralised-critic, decentralised-actor training with prioritized replay.

Actions are handled in a normalised space ``u in [-1, 1]^2`` per agent
(actor tanh outputs); :func:`to_env_action` maps them to a flying angle
and distance.  Joint actions stored in replay are normalised, laid out as
``[u_0, u_1, ..., u_{M-1}]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .env import TWO_PI, UavAction
from .neural import Adam, DenseNet, NonFiniteError, soft_update
from .replay import Batch, PriorityBuffer, is_weight

ACT_DIM = 2


@dataclass
class Agent:
    index: int
    actor: DenseNet
    critic: DenseNet
    target_actor: DenseNet
    target_critic: DenseNet
    actor_opt: Adam
    critic_opt: Adam
    sigma: float
    buffer: PriorityBuffer


def make_agents(cfg: SimConfig, rng: np.random.Generator) -> list[Agent]:
    obs, state = cfg.obs_len, cfg.state_len
    joint = cfg.n_uavs * ACT_DIM
    agents = []
    for m in range(cfg.n_uavs):
        actor = DenseNet((obs, *cfg.hidden, ACT_DIM), "tanh", rng, final_scale=1e-3)
        critic = DenseNet((state + joint, *cfg.hidden, 1), "identity", rng)
        agents.append(Agent(
            index=m,
            actor=actor,
            critic=critic,
            target_actor=actor.copy(),
            target_critic=critic.copy(),
            actor_opt=Adam(actor.params, cfg.lr_actor),
            critic_opt=Adam(critic.params, cfg.lr_critic),
            sigma=cfg.noise_std,
            buffer=PriorityBuffer(cfg.buffer_cap, state, joint, cfg.beta_priority, cfg.eps_priority),
        ))
    check_agents(agents, cfg)
    return agents


def check_agents(agents: list[Agent], cfg: SimConfig) -> None:
    want = cfg.state_len + cfg.n_uavs * ACT_DIM
    for a in agents:
        if a.critic.widths[0] != want or a.target_critic.widths[0] != want:
            raise ValueError(f"agent {a.index}: critic input {a.critic.widths[0]} != {want}")
        if a.actor.widths[0] != cfg.obs_len or a.actor.widths[-1] != ACT_DIM:
            raise ValueError(f"agent {a.index}: actor shape {a.actor.widths} does not fit")
        if a.target_actor.widths != a.actor.widths or a.target_critic.widths != a.critic.widths:
            raise ValueError(f"agent {a.index}: target nets do not mirror online nets")


def to_env_action(u, cfg: SimConfig) -> UavAction:
    """Affine map ``[-1, 1]^2 -> [0, 2pi) x [0, d_max]``; 0 maps to the midpoint."""
    u0 = min(max(float(u[0]), -1.0), 1.0)
    u1 = min(max(float(u[1]), -1.0), 1.0)
    angle = math.pi * (u0 + 1.0)
    if angle >= TWO_PI:
        angle -= TWO_PI
    return UavAction(angle, 0.5 * cfg.d_max * (u1 + 1.0))


def from_env_action(action: UavAction, cfg: SimConfig) -> np.ndarray:
    """Inverse of :func:`to_env_action` (used to store scripted actions)."""
    return np.array([action.angle / math.pi - 1.0, 2.0 * action.dist / cfg.d_max - 1.0])


def select_action(agent: Agent, obs, explore: bool, rng: np.random.Generator | None, cfg: SimConfig):
    """Return ``(env_action, normalised_u)`` from the agent's own observation only."""
    u = agent.actor.forward(obs)
    if explore and agent.sigma > 0:
        u = np.clip(u + rng.normal(0.0, agent.sigma, size=u.shape), -1.0, 1.0)
    return to_env_action(u, cfg), u


def obs_slice(states: np.ndarray, m: int, cfg: SimConfig) -> np.ndarray:
    L = cfg.obs_len
    return states[..., m * L:(m + 1) * L]


def target_joint_action(agents: list[Agent], next_states: np.ndarray, cfg: SimConfig) -> np.ndarray:
    return np.concatenate(
        [a.target_actor.forward(obs_slice(next_states, a.index, cfg)) for a in agents], axis=-1
    )


def td_error(agent: Agent, batch: Batch, agents: list[Agent], cfg: SimConfig) -> np.ndarray:
    """``r + gamma * Q'(s', pi'(s')) - Q(s, a)`` for every transition in ``batch``."""
    next_u = target_joint_action(agents, batch.next_states, cfg)
    q_next = agent.target_critic.forward(np.hstack([batch.next_states, next_u]))[:, 0]
    q = agent.critic.forward(np.hstack([batch.states, batch.actions]))[:, 0]
    return batch.rewards + cfg.gamma * q_next - q


def critic_loss_and_grads(agent: Agent, batch: Batch, probs, agents: list[Agent], cfg: SimConfig):
    """Weighted TD loss ``mean(w * delta^2)`` and its critic gradient.

    The bootstrapped target is treated as a constant.
    """
    K = len(batch)
    next_u = target_joint_action(agents, batch.next_states, cfg)
    y = batch.rewards + cfg.gamma * agent.target_critic.forward(np.hstack([batch.next_states, next_u]))[:, 0]
    q, cache = agent.critic.forward_cached(np.hstack([batch.states, batch.actions]))
    delta = y - q[:, 0]
    w = is_weight(K, probs, cfg.mu_is)
    loss = float(np.mean(w * delta**2))
    upstream = (-2.0 * w * delta / K)[:, None]
    grads, _ = agent.critic.backward(cache, upstream)
    return loss, grads, delta


def critic_update(agent: Agent, batch: Batch, probs, agents: list[Agent], cfg: SimConfig):
    """One Adam step on the critic.  Returns ``(loss, |delta|)``."""
    loss, grads, delta = critic_loss_and_grads(agent, batch, probs, agents, cfg)
    if not math.isfinite(loss):
        raise NonFiniteError(f"agent {agent.index}: critic loss {loss} (max |delta| {np.max(np.abs(delta))})")
    agent.critic_opt.step(agent.critic.params, grads)
    return loss, np.abs(delta)


def actor_objective_and_grads(agent: Agent, batch: Batch, cfg: SimConfig):
    """``J = mean Q(s, a)`` with this agent's slice of ``a`` replaced by ``pi(o)``.

    Returns ``(J, grads of -J + actor_reg * mean|z|^2 w.r.t. actor params)``
    where ``z`` is the pre-tanh actor output; the penalty keeps the head
    out of saturation.  Other agents keep the actions stored in the batch.
    """
    K = len(batch)
    obs = obs_slice(batch.states, agent.index, cfg)
    u, a_cache = agent.actor.forward_cached(obs)
    joint = batch.actions.copy()
    lo = agent.index * ACT_DIM
    joint[:, lo:lo + ACT_DIM] = u
    q, c_cache = agent.critic.forward_cached(np.hstack([batch.states, joint]))
    _, dx = agent.critic.backward(c_cache, np.full((K, 1), -1.0 / K))
    off = batch.states.shape[1] + lo
    pre = None
    if cfg.actor_reg > 0:
        hidden = a_cache[0][-2]
        z = hidden @ agent.actor.params[-2] + agent.actor.params[-1]
        pre = 2.0 * cfg.actor_reg * z / K
    grads, _ = agent.actor.backward(a_cache, dx[:, off:off + ACT_DIM], pre)
    return float(q.mean()), grads


def actor_update(agent: Agent, batch: Batch, cfg: SimConfig) -> float:
    J, grads = actor_objective_and_grads(agent, batch, cfg)
    if not math.isfinite(J):
        raise NonFiniteError(f"agent {agent.index}: actor objective {J}")
    agent.actor_opt.step(agent.actor.params, grads)
    return J


def ready(agents: list[Agent], cfg: SimConfig) -> bool:
    need = max(cfg.batch_K, cfg.learn_start)
    return all(len(a.buffer) >= need for a in agents)


def train_step(agents: list[Agent], cfg: SimConfig, rng: np.random.Generator) -> dict:
    """Sample, update critic and actor, soft-update targets, refresh priorities."""
    if not ready(agents, cfg):
        return {"trained": False}
    diag = {"trained": True, "critic_loss": [], "actor_q": [], "stale": 0}
    for agent in agents:
        batch, ids, probs = agent.buffer.sample(cfg.batch_K, rng)
        loss, abs_delta = critic_update(agent, batch, probs, agents, cfg)
        diag["critic_loss"].append(loss)
        diag["actor_q"].append(actor_update(agent, batch, cfg))
        soft_update(agent.target_actor, agent.actor, cfg.tau)
        soft_update(agent.target_critic, agent.critic, cfg.tau)
        diag["stale"] += agent.buffer.update_priorities(ids, abs_delta)
        agent.sigma *= cfg.noise_decay
    return diag


def push_transition(agents: list[Agent], state, joint_u, rewards, next_state, cfg: SimConfig) -> None:
    """Store ``(s, a, r_m, s')`` in every agent's buffer (rewards scaled for training)."""
    for agent in agents:
        r = float(rewards[agent.index]) * cfg.reward_scale
        delta = None
        if cfg.new_priority == "td":
            one = Batch(state[None, :], np.asarray(joint_u)[None, :], np.array([r]), next_state[None, :])
            delta = float(td_error(agent, one, agents, cfg)[0])
        agent.buffer.push(state, joint_u, r, next_state, delta)
