"""Proportional prioritized replay backed by a sum tree."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SumTree:
    """Array-backed binary sum tree over ``capacity`` leaves.

    Node 1 is the root, node ``i`` has children ``2i`` and ``2i + 1``, and
    leaves occupy ``[size, 2 * size)`` where ``size`` is the capacity
    rounded up to a power of two.  Parents are recomputed from their
    children on every write, so the root never drifts from the leaf sum
    by more than ordinary summation rounding.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.size = 1 << max(0, (capacity - 1).bit_length())
        self.depth = self.size.bit_length() - 1
        self.tree = np.zeros(2 * self.size)

    @property
    def total(self) -> float:
        return float(self.tree[1])

    def leaves(self) -> np.ndarray:
        return self.tree[self.size:self.size + self.capacity]

    def set(self, idx, values) -> None:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        values = np.broadcast_to(np.asarray(values, dtype=float), idx.shape)
        if np.any((idx < 0) | (idx >= self.capacity)):
            raise IndexError("leaf index out of range")
        if np.any(values < 0):
            raise ValueError("sum tree values must be non-negative")
        nodes = idx + self.size
        self.tree[nodes] = values
        for _ in range(self.depth):
            nodes = np.unique(nodes >> 1)
            self.tree[nodes] = self.tree[2 * nodes] + self.tree[2 * nodes + 1]

    def find(self, mass) -> np.ndarray:
        """Leaf index for each prefix-sum value in ``mass`` (batched descent)."""
        mass = np.array(mass, dtype=float, ndmin=1)
        node = np.ones(mass.shape, dtype=np.int64)
        for _ in range(self.depth):
            left = 2 * node
            left_sum = self.tree[left]
            go_right = mass >= left_sum
            mass = np.where(go_right, mass - left_sum, mass)
            node = np.where(go_right, left + 1, left)
        return node - self.size


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)


def is_weight(K: int, prob, mu: float):
    """Importance weight ``(K * P)^-mu``."""
    prob = np.asarray(prob, dtype=float)
    if np.any(prob <= 0) or np.any(prob > 1):
        raise ValueError("sampling probability must lie in (0, 1]")
    w = (K * prob) ** (-mu)
    return float(w) if w.ndim == 0 else w


class PriorityBuffer:
    """Fixed-capacity FIFO of transitions sampled with ``P ~ priority^beta``.

    Priorities are stored raw (``|delta| + eps``); the tree holds
    ``priority ** beta``.  ``sample`` returns transition ids that stay
    valid until the slot is overwritten, after which
    ``update_priorities`` skips them.
    """

    def __init__(self, capacity: int, state_dim: int, action_dim: int,
                 beta: float = 0.6, eps: float = 1e-3):
        self.capacity = capacity
        self.beta = beta
        self.eps = eps
        self.tree = SumTree(capacity)
        self.priorities = np.zeros(capacity)
        self.ids = np.full(capacity, -1, dtype=np.int64)
        # storage grows by doubling up to capacity
        rows = min(capacity, 1024)
        self.states = np.zeros((rows, state_dim))
        self.actions = np.zeros((rows, action_dim))
        self.rewards = np.zeros(rows)
        self.next_states = np.zeros((rows, state_dim))
        self.pushed = 0
        self.max_priority = 1.0

    def __len__(self) -> int:
        return min(self.pushed, self.capacity)

    def push(self, state, action, reward: float, next_state, delta: float | None = None) -> int:
        """Store one transition.  Without ``delta`` it gets the largest priority seen."""
        slot = self.pushed % self.capacity
        if slot >= len(self.rewards):
            self._grow()
        self.states[slot] = state
        self.actions[slot] = action
        self.rewards[slot] = reward
        self.next_states[slot] = next_state
        prio = self.max_priority if delta is None else abs(delta) + self.eps
        self._set_priority(np.array([slot]), np.array([prio]))
        self.ids[slot] = self.pushed
        self.pushed += 1
        return self.pushed - 1

    def _grow(self) -> None:
        rows = min(self.capacity, 2 * len(self.rewards))
        for name in ("states", "actions", "rewards", "next_states"):
            old = getattr(self, name)
            new = np.zeros((rows,) + old.shape[1:])
            new[: len(old)] = old
            setattr(self, name, new)

    def _set_priority(self, slots: np.ndarray, prio: np.ndarray) -> None:
        self.priorities[slots] = prio
        self.tree.set(slots, prio**self.beta)
        self.max_priority = max(self.max_priority, float(prio.max()))

    def probabilities(self, ids=None) -> np.ndarray:
        """Sampling probability of the given ids (all stored slots by default)."""
        if ids is None:
            slots = np.arange(len(self))
        else:
            slots = np.asarray(ids, dtype=np.int64) % self.capacity
        return self.priorities[slots] ** self.beta / self.tree.total

    def draw(self, n: int, rng: np.random.Generator):
        """``n`` proportional draws with replacement; returns ``(ids, probabilities)``."""
        size = len(self)
        if size == 0:
            raise ValueError("cannot draw from an empty buffer")
        total = self.tree.total
        slots = self.tree.find(rng.uniform(0.0, total, size=n))
        # rounding at the right edge can land on an empty leaf
        slots = np.minimum(slots, size - 1)
        return slots, self.priorities[slots] ** self.beta / total

    def sample(self, K: int, rng: np.random.Generator):
        """Draw a batch of ``K`` transitions with replacement.

        Returns ``(batch, ids, probabilities)``.
        """
        n = len(self)
        if n < K:
            raise ValueError(f"buffer holds {n} transitions, cannot sample {K}")
        slots, probs = self.draw(K, rng)
        batch = Batch(self.states[slots], self.actions[slots], self.rewards[slots],
                      self.next_states[slots])
        return batch, self.ids[slots].copy(), probs

    def update_priorities(self, ids, deltas) -> int:
        """Set priority ``|delta| + eps`` for each still-stored id; return how many were stale."""
        ids = np.asarray(ids, dtype=np.int64)
        slots = ids % self.capacity
        live = self.ids[slots] == ids
        if np.any(live):
            prio = np.abs(np.asarray(deltas, dtype=float)[live]) + self.eps
            # later entries win for duplicate slots, matching sequential updates
            s, p = slots[live], prio
            _, last = np.unique(s[::-1], return_index=True)
            keep = len(s) - 1 - last
            self._set_priority(s[keep], p[keep])
        return int((~live).sum())
