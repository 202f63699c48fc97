import math

import numpy as np
import pytest

from helpers import central_diff, flat, rel_err
from uavmec import maddpg
from uavmec.config import desk_scale
from uavmec.neural import DenseNet
from uavmec.replay import Batch

CFG = desk_scale(n_ues=6, n_uavs=2, hidden=(16, 16), batch_K=8, gamma=0.95)


def _agents(cfg=CFG, seed=0):
    return maddpg.make_agents(cfg, np.random.default_rng(seed))


def _batch(cfg=CFG, K=8, seed=1):
    rng = np.random.default_rng(seed)
    S, A = cfg.state_len, 2 * cfg.n_uavs
    return Batch(rng.uniform(0, 1, (K, S)), rng.uniform(-1, 1, (K, A)),
                 rng.normal(size=K), rng.uniform(0, 1, (K, S)))


class FixedNormal:
    """Stand-in rng whose normal draws are a constant."""

    def __init__(self, value):
        self.value = value

    def normal(self, loc, scale, size):
        return np.full(size, self.value)


def _constant_critic(net: DenseNet, value: float):
    for p in net.params:
        p[...] = 0.0
    net.params[-1][...] = value


def test_zero_actor_maps_to_midpoint():
    a = _agents()[0]
    a.actor.params[-2][...] = 0.0
    a.actor.params[-1][...] = 0.0
    act, u = maddpg.select_action(a, np.ones(CFG.obs_len), False, None, CFG)
    assert act.angle == pytest.approx(math.pi)
    assert act.dist == pytest.approx(CFG.d_max / 2)


def test_explore_without_noise_is_greedy():
    a = _agents()[0]
    a.sigma = 0.0
    obs = np.linspace(0, 1, CFG.obs_len)
    g = maddpg.select_action(a, obs, False, None, CFG)
    e = maddpg.select_action(a, obs, True, np.random.default_rng(0), CFG)
    assert g[0] == e[0]


def test_noise_is_clipped():
    a = _agents()[0]
    a.actor.params[-2][...] = 0.0
    a.actor.params[-1][...] = np.arctanh(0.99)
    _, u = maddpg.select_action(a, np.zeros(CFG.obs_len), True, FixedNormal(0.5), CFG)
    assert u.tolist() == [1.0, 1.0]


def test_action_mapping_range():
    for u0 in np.linspace(-1, 1, 101):
        act = maddpg.to_env_action([u0, u0], CFG)
        act.check(CFG)
    back = maddpg.from_env_action(maddpg.to_env_action([0.3, -0.4], CFG), CFG)
    assert back == pytest.approx([0.3, -0.4])


def test_td_error_example():
    agents = _agents()
    a = agents[0]
    _constant_critic(a.critic, 1.0)
    _constant_critic(a.target_critic, 2.0)
    b = _batch(K=1)
    b.rewards[:] = 1.0
    assert maddpg.td_error(a, b, agents, CFG)[0] == pytest.approx(1.9)
    _constant_critic(a.critic, 0.0)
    _constant_critic(a.target_critic, 0.0)
    assert maddpg.td_error(a, b, agents, CFG)[0] == pytest.approx(1.0)
    _constant_critic(a.critic, 0.25)
    _constant_critic(a.target_critic, 7.0)
    cfg0 = CFG.replace(gamma=1e-300)
    assert maddpg.td_error(a, b, agents, cfg0)[0] == pytest.approx(0.75)


def test_uniform_probabilities_give_plain_mse():
    agents = _agents()
    b = _batch()
    K = len(b)
    loss, _, delta = maddpg.critic_loss_and_grads(agents[0], b, np.full(K, 1 / K), agents, CFG)
    assert loss == pytest.approx(np.mean(delta**2), rel=1e-12)
    assert delta == pytest.approx(maddpg.td_error(agents[0], b, agents, CFG))


def test_critic_gradient_matches_finite_differences():
    agents = _agents(CFG.replace(hidden=(32, 32)))
    a = agents[1]
    b = _batch()
    probs = np.random.default_rng(3).uniform(0.01, 0.2, len(b))
    _, grads, _ = maddpg.critic_loss_and_grads(a, b, probs, agents, CFG)
    theta = a.critic.get_flat()

    def loss(th):
        a.critic.set_flat(th)
        return maddpg.critic_loss_and_grads(a, b, probs, agents, CFG)[0]

    num = central_diff(loss, theta)
    a.critic.set_flat(theta)
    assert rel_err(flat(grads), num) < 1e-4


def test_actor_gradient_matches_finite_differences():
    agents = _agents(seed=4)
    a = agents[1]
    # make the actor output sensitive to its parameters
    a.actor.params[-2][...] = np.random.default_rng(0).normal(scale=0.5, size=a.actor.params[-2].shape)
    b = _batch(seed=5)
    _, grads = maddpg.actor_objective_and_grads(a, b, CFG)
    theta = a.actor.get_flat()

    obs = maddpg.obs_slice(b.states, 1, CFG)

    def neg_j(th):
        a.actor.set_flat(th)
        z = np.arctanh(a.actor.forward(obs))
        penalty = CFG.actor_reg * np.mean(np.sum(z**2, axis=1))
        return -maddpg.actor_objective_and_grads(a, b, CFG)[0] + penalty

    num = central_diff(neg_j, theta)
    a.actor.set_flat(theta)
    assert rel_err(flat(grads), num) < 1e-4


def test_critic_loss_decreases_on_frozen_batch():
    agents = _agents(CFG.replace(lr_critic=1e-3))
    a = agents[0]
    b = _batch()
    probs = np.full(len(b), 1 / len(b))
    first = maddpg.critic_update(a, b, probs, agents, CFG)[0]
    for _ in range(99):
        last = maddpg.critic_update(a, b, probs, agents, CFG)[0]
    assert last < first


def test_actor_unchanged_when_critic_ignores_own_action():
    agents = _agents(CFG.replace(actor_reg=0.0))
    a = agents[0]
    W = a.critic.params[0]
    lo = CFG.state_len + 2 * a.index
    W[lo:lo + 2, :] = 0.0
    before = a.actor.get_flat()
    maddpg.actor_update(a, _batch(), CFG.replace(actor_reg=0.0))
    assert np.array_equal(a.actor.get_flat(), before)


class QuadraticCritic:
    """Q(s, a) = -|a_m - target|^2, with the network call signature."""

    def __init__(self, offset, target):
        self.offset, self.target = offset, np.asarray(target)

    def forward_cached(self, x):
        a = x[:, self.offset:self.offset + 2]
        return -np.sum((a - self.target) ** 2, axis=1, keepdims=True), x

    def backward(self, x, up):
        dx = np.zeros_like(x)
        a = x[:, self.offset:self.offset + 2]
        dx[:, self.offset:self.offset + 2] = -2 * (a - self.target) * up
        return [], dx


def test_actor_converges_on_quadratic_critic():
    cfg = CFG.replace(lr_actor=1e-2)
    agents = maddpg.make_agents(cfg, np.random.default_rng(0))
    a = agents[1]
    target = np.array([0.3, -0.5])
    a.critic = QuadraticCritic(cfg.state_len + 2, target)
    b = _batch(cfg)
    for _ in range(2000):
        maddpg.actor_update(a, b, cfg)
    out = a.actor.forward(maddpg.obs_slice(b.states, 1, cfg))
    assert np.max(np.abs(out - target)) < 1e-2


def _filled(cfg=CFG, seed=0, n=None):
    agents = _agents(cfg, seed)
    rng = np.random.default_rng(seed + 1)
    for _ in range(n if n is not None else cfg.batch_K):
        s, s2 = rng.uniform(size=cfg.state_len), rng.uniform(size=cfg.state_len)
        maddpg.push_transition(agents, s, rng.uniform(-1, 1, 4), rng.normal(size=2) * 500, s2, cfg)
    return agents


def test_train_step_warm_up_gate():
    agents = _filled(n=CFG.batch_K - 1)
    before = [a.actor.get_flat() for a in agents]
    assert maddpg.train_step(agents, CFG, np.random.default_rng(0)) == {"trained": False}
    assert all(np.array_equal(b, a.actor.get_flat()) for b, a in zip(before, agents))


def test_train_step_soft_updates_targets():
    agents = _filled()
    old = [(a.target_actor.get_flat(), a.target_critic.get_flat()) for a in agents]
    diag = maddpg.train_step(agents, CFG, np.random.default_rng(0))
    assert diag["trained"]
    for a, (ta, tc) in zip(agents, old):
        assert a.target_actor.get_flat() == pytest.approx((1 - CFG.tau) * ta + CFG.tau * a.actor.get_flat(), abs=1e-15)
        assert a.target_critic.get_flat() == pytest.approx((1 - CFG.tau) * tc + CFG.tau * a.critic.get_flat(), abs=1e-15)
        assert a.sigma == pytest.approx(CFG.noise_std * CFG.noise_decay)


def test_train_step_deterministic():
    runs = []
    for _ in range(2):
        agents = _filled(n=40)
        rng = np.random.default_rng(11)
        for _ in range(5):
            maddpg.train_step(agents, CFG, rng)
        runs.append(np.concatenate([np.concatenate([a.actor.get_flat(), a.critic.get_flat()]) for a in agents]))
    assert np.array_equal(runs[0], runs[1])


def test_sigma_non_increasing():
    agents = _filled(n=20)
    rng = np.random.default_rng(0)
    prev = agents[0].sigma
    for _ in range(10):
        maddpg.train_step(agents, CFG, rng)
        assert 0 < agents[0].sigma <= prev
        prev = agents[0].sigma


def test_action_depends_only_on_own_observation():
    agents = _agents()
    rng = np.random.default_rng(2)
    state = rng.uniform(size=CFG.state_len)
    other = state.copy()
    L = CFG.obs_len
    other[L:] = rng.permutation(other[L:])
    u1 = maddpg.select_action(agents[0], maddpg.obs_slice(state, 0, CFG), False, None, CFG)[1]
    u2 = maddpg.select_action(agents[0], maddpg.obs_slice(other, 0, CFG), False, None, CFG)[1]
    assert np.array_equal(u1, u2)


def test_critic_shape_checked():
    agents = _agents()
    agents[0].critic = DenseNet((CFG.state_len + 3, 4, 1))
    with pytest.raises(ValueError):
        maddpg.check_agents(agents, CFG)


def test_td_priority_option():
    cfg = CFG.replace(new_priority="td")
    agents = _filled(cfg, n=3)
    assert not np.allclose(agents[0].buffer.priorities[:3], 1.0)
