"""Small dense networks in numpy with hand-written reverse mode and Adam.

Shapes follow the batch-first convention: inputs are ``(B, n_in)``, weight
matrices ``(n_in, n_out)``.  Everything is float64.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

ACTIVATIONS = ("identity", "tanh")

MAGIC = b"UMECNET\0"
FORMAT_VERSION = 1


class NonFiniteError(FloatingPointError):
    pass


class DenseNet:
    """ReLU MLP with an identity or tanh output layer."""

    def __init__(
        self,
        widths: Sequence[int],
        out_act: str = "identity",
        rng: np.random.Generator | None = None,
        final_scale: float = 1.0,
    ):
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if out_act not in ACTIVATIONS:
            raise ValueError(f"unknown output activation {out_act!r}")
        self.widths = tuple(int(w) for w in widths)
        self.out_act = out_act
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params: list[np.ndarray] = []
        n_layers = len(self.widths) - 1
        for i, (n_in, n_out) in enumerate(zip(self.widths[:-1], self.widths[1:])):
            bound = 1.0 / np.sqrt(n_in)
            if i == n_layers - 1:
                bound *= final_scale
            self.params.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            self.params.append(rng.uniform(-bound, bound, size=n_out))

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "DenseNet":
        other = DenseNet.__new__(DenseNet)
        other.widths = self.widths
        other.out_act = self.out_act
        other.params = [p.copy() for p in self.params]
        return other

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.widths[0]:
            raise ValueError(f"expected input width {self.widths[0]}, got {x.shape[-1]}")
        return x

    def forward(self, x) -> np.ndarray:
        y, _ = self.forward_cached(x)
        return y

    def __call__(self, x) -> np.ndarray:
        return self.forward(x)

    def forward_cached(self, x):
        x = self._check_input(x)
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        acts = [h]
        for i in range(self.n_layers):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            z = h @ W + b
            if i < self.n_layers - 1:
                h = np.maximum(z, 0.0)
            elif self.out_act == "tanh":
                h = np.tanh(z)
            else:
                h = z
            acts.append(h)
        out = h[0] if squeeze else h
        return out, (acts, squeeze)

    def backward(self, cache, upstream, pre_grad=None):
        """Return ``(param_grads, input_grad)`` for ``sum(upstream * y)``.

        ``pre_grad`` is an optional extra gradient w.r.t. the output
        layer's pre-activation, added after the output nonlinearity.
        """
        acts, squeeze = cache
        g = np.asarray(upstream, dtype=float)
        if squeeze:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ValueError(f"upstream shape {g.shape} does not match output {acts[-1].shape}")
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        for i in reversed(range(self.n_layers)):
            out = acts[i + 1]
            if i < self.n_layers - 1:
                g = g * (out > 0)
            elif self.out_act == "tanh":
                g = g * (1.0 - out * out)
            if pre_grad is not None and i == self.n_layers - 1:
                extra = np.asarray(pre_grad, dtype=float)
                g = g + (extra[None, :] if squeeze else extra)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
        dx = g[0] if squeeze else g
        return grads, dx

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ValueError("flat vector has the wrong length")
        i = 0
        for p in self.params:
            p[...] = flat[i:i + p.size].reshape(p.shape)
            i += p.size


class Adam:
    """Adam with bias correction (Kingma & Ba defaults)."""

    def __init__(self, params: Sequence[np.ndarray], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        """Update ``params`` in place."""
        if len(params) != len(self.m):
            raise ValueError("parameter list does not match optimizer state")
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise NonFiniteError("non-finite gradient passed to Adam")
        self.step_count += 1
        c1 = 1.0 - self.beta1**self.step_count
        c2 = 1.0 - self.beta2**self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def soft_update(target: DenseNet, online: DenseNet, tau: float) -> None:
    if target.widths != online.widths:
        raise ValueError("target and online networks differ in shape")
    for tp, op in zip(target.params, online.params):
        tp *= 1.0 - tau
        tp += tau * op


def save_net(net: DenseNet, path: str | Path) -> None:
    """Write ``net`` as header + little-endian float64 parameters.

    Header: 8-byte magic, then ``<I`` version, ``<I`` activation code,
    ``<I`` number of widths, one ``<I`` per width.  Parameters follow in
    layer order, each layer as ``W`` (row-major, ``n_in x n_out``) then ``b``.
    """
    header = MAGIC + struct.pack(
        f"<III{len(net.widths)}I", FORMAT_VERSION, ACTIVATIONS.index(net.out_act),
        len(net.widths), *net.widths,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for p in net.params:
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_net(path: str | Path) -> DenseNet:
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: not a network checkpoint")
    version, act, n = struct.unpack_from("<III", blob, 8)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    widths = struct.unpack_from(f"<{n}I", blob, 20)
    offset = 20 + 4 * n
    net = DenseNet.__new__(DenseNet)
    net.widths = tuple(widths)
    net.out_act = ACTIVATIONS[act]
    net.params = []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        for shape in ((n_in, n_out), (n_out,)):
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
            net.params.append(arr.astype(np.float64).reshape(shape))
            offset += 8 * count
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return net
