"""Small fully-connected networks with hand-written reverse-mode backprop.

Everything is float64 numpy. Gradients are exact (verified against central
finite differences in the test suite), which keeps training runs bitwise
reproducible from a seed -- no framework nondeterminism.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "tanh", "linear")


@dataclass
class Mlp:
    """Layered weights/biases with a per-layer activation name.

    weights[i] has shape (fan_in, fan_out); biases[i] has shape (fan_out,).
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("layer count mismatch")
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        for i in range(len(self.weights) - 1):
            if self.weights[i].shape[1] != self.weights[i + 1].shape[0]:
                raise ValueError("incompatible consecutive layer shapes")
        for w, b in zip(self.weights, self.biases):
            if w.shape[1] != b.shape[0]:
                raise ValueError("bias shape mismatch")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def clone(self) -> "Mlp":
        return Mlp(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.activations),
        )

    def check_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )


def init_mlp(sizes: list[int], activations: list[str], rng: np.random.Generator) -> Mlp:
    """Glorot-uniform init. sizes = [in, h1, ..., out], len(activations) = len(sizes)-1."""
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation per layer")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(weights, biases, list(activations))


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def mlp_forward(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Forward pass for a batch x of shape (n, in_dim). Returns (out, cache)."""
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"input shape {x.shape} incompatible with net input {net.in_dim}")
    cache = []
    a = x
    for w, b, act in zip(net.weights, net.biases, net.activations):
        z = a @ w + b
        a_next = _act(act, z)
        cache.append((a, z, a_next))
        a = a_next
    return a, cache


@dataclass
class MlpGrads:
    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


def mlp_backward(net: Mlp, cache: list, dout: np.ndarray) -> tuple[MlpGrads, np.ndarray]:
    """Backprop dL/dout through the cached forward pass.

    Returns parameter gradients and dL/dx (needed when the net's input is
    itself produced by another differentiable module).
    """
    d_weights = [None] * len(net.weights)
    d_biases = [None] * len(net.biases)
    delta = dout
    for i in range(len(net.weights) - 1, -1, -1):
        a_in, z, a_out = cache[i]
        delta = delta * _act_grad(net.activations[i], z, a_out)
        d_weights[i] = a_in.T @ delta
        d_biases[i] = delta.sum(axis=0)
        delta = delta @ net.weights[i].T
    return MlpGrads(d_weights, d_biases), delta


def zeros_like_grads(net: Mlp) -> MlpGrads:
    return MlpGrads([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])


@dataclass
class AdamState:
    """Adaptive-moment optimizer state for one Mlp."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_net(cls, net: Mlp) -> "AdamState":
        return cls(
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases],
            [np.zeros_like(b) for b in net.biases],
        )


def adam_step(net: Mlp, grads: MlpGrads, state: AdamState, lr: float) -> None:
    """One in-place adaptive-moment descent step on net along grads."""
    state.t += 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for i in range(len(net.weights)):
        for param, g, m, v in (
            (net.weights[i], grads.d_weights[i], state.m_w[i], state.v_w[i]),
            (net.biases[i], grads.d_biases[i], state.m_b[i], state.v_b[i]),
        ):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def polyak_update(net: Mlp, target: Mlp, tau: float) -> None:
    """In-place exponential averaging: target <- tau*net + (1-tau)*target."""
    if [w.shape for w in net.weights] != [w.shape for w in target.weights]:
        raise ValueError("polyak shape mismatch")
    for tw, w in zip(target.weights, net.weights):
        tw *= 1.0 - tau
        tw += tau * w
    for tb, b in zip(target.biases, net.biases):
        tb *= 1.0 - tau
        tb += tau * b


# --- checkpoint codec -------------------------------------------------------
# Arrays are stored as base64 of the raw little-endian float64 bytes, so a
# save/load round trip is bit-exact.


def encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype=np.float64)
    return {
        "shape": list(a.shape),
        "dtype": "<f8",
        "data": base64.b64encode(a.astype("<f8").tobytes()).decode("ascii"),
    }


def decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    a = np.frombuffer(raw, dtype=np.dtype(d["dtype"])).astype(np.float64)
    return a.reshape(d["shape"]).copy()


def mlp_to_dict(net: Mlp) -> dict:
    return {
        "weights": [encode_array(w) for w in net.weights],
        "biases": [encode_array(b) for b in net.biases],
        "activations": list(net.activations),
    }


def mlp_from_dict(d: dict) -> Mlp:
    return Mlp(
        [decode_array(w) for w in d["weights"]],
        [decode_array(b) for b in d["biases"]],
        list(d["activations"]),
    )


def adam_to_dict(state: AdamState) -> dict:
    return {
        "m_w": [encode_array(a) for a in state.m_w],
        "v_w": [encode_array(a) for a in state.v_w],
        "m_b": [encode_array(a) for a in state.m_b],
        "v_b": [encode_array(a) for a in state.v_b],
        "t": state.t,
        "beta1": state.beta1,
        "beta2": state.beta2,
        "eps": state.eps,
    }


def adam_from_dict(d: dict) -> AdamState:
    return AdamState(
        [decode_array(a) for a in d["m_w"]],
        [decode_array(a) for a in d["v_w"]],
        [decode_array(a) for a in d["m_b"]],
        [decode_array(a) for a in d["v_b"]],
        t=int(d["t"]),
        beta1=float(d["beta1"]),
        beta2=float(d["beta2"]),
        eps=float(d["eps"]),
    )
