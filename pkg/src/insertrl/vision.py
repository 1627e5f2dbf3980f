"""Unsupervised visual features and the binary visual reward classifier.

A small variational autoencoder is pretrained on rendered workspace frames
(reconstruction + KL-to-unit-Gaussian, both hand-differentiated), then the
encoder is frozen and the decoder discarded. The agent consumes the latent
MEAN, keeping the policy input deterministic. When pose is withheld, a
logistic classifier on the latent decides the episode's binary reward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nets
from .nets import AdamState, Mlp, adam_step, init_mlp, mlp_backward, mlp_forward


@dataclass
class VaeParams:
    encoder: Mlp  # image -> (mean, logvar), output width 2*latent_dim
    decoder: Mlp  # latent -> image
    beta: float
    latent_dim: int

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.encoder.out_dim != 2 * self.latent_dim:
            raise ValueError("encoder must output mean and logvar for every latent unit")
        if self.decoder.in_dim != self.latent_dim:
            raise ValueError("decoder input width must equal latent_dim")

    @property
    def image_dim(self) -> int:
        return self.encoder.in_dim

    def freeze(self) -> None:
        """Make all weights read-only; nothing downstream may mutate them."""
        for net in (self.encoder, self.decoder):
            for a in net.weights + net.biases:
                a.flags.writeable = False


@dataclass(frozen=True)
class LatentCode:
    mean: np.ndarray
    logvar: np.ndarray
    sample: np.ndarray
    eps: np.ndarray  # the reparameterization noise actually used


def init_vae(
    image_dim: int,
    latent_dim: int = 16,
    hidden: tuple[int, ...] = (128, 128),
    beta: float = 1.0,
    rng: np.random.Generator | None = None,
) -> VaeParams:
    rng = rng if rng is not None else np.random.default_rng(0)
    acts = ["relu"] * len(hidden)
    encoder = init_mlp([image_dim, *hidden, 2 * latent_dim], acts + ["linear"], rng)
    decoder = init_mlp([latent_dim, *hidden, image_dim], acts + ["linear"], rng)
    return VaeParams(encoder, decoder, beta, latent_dim)


def kl_unit_gaussian(mean: np.ndarray, logvar: np.ndarray) -> float:
    """Closed-form KL(N(mean, exp(logvar)) || N(0, I)), always >= 0."""
    mean = np.asarray(mean, dtype=float)
    logvar = np.asarray(logvar, dtype=float)
    return float(-0.5 * np.sum(1.0 + logvar - mean**2 - np.exp(logvar)))


def _as_batch(image: np.ndarray, image_dim: int) -> np.ndarray:
    x = np.asarray(image, dtype=float)
    if x.ndim >= 2 and x.shape[-1] != image_dim:
        x = x.reshape(x.shape[0] if x.ndim == 3 else 1, -1)
    elif x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != image_dim:
        raise ValueError(f"image size {x.shape} does not match encoder input {image_dim}")
    return x


def vae_loss(
    params: VaeParams,
    image: np.ndarray,
    rng: np.random.Generator | None = None,
    eps: np.ndarray | None = None,
) -> tuple[float, float, float]:
    """loss = recon + beta*kl, averaged per sample.

    recon is the Gaussian unit-variance reconstruction term
    0.5*sum((xhat - x)^2) per image; eps (the reparameterization draw) can be
    passed explicitly for reproducible gradient checks.
    """
    x = _as_batch(image, params.image_dim)
    d = params.latent_dim
    enc_out, _ = mlp_forward(params.encoder, x)
    mean, logvar = enc_out[:, :d], enc_out[:, d:]
    if eps is None:
        eps = rng.standard_normal(mean.shape) if rng is not None else np.zeros_like(mean)
    z = mean + np.exp(0.5 * logvar) * eps
    xhat, _ = mlp_forward(params.decoder, z)
    n = len(x)
    recon = float(0.5 * np.sum((xhat - x) ** 2) / n)
    kl = float(-0.5 * np.sum(1.0 + logvar - mean**2 - np.exp(logvar)) / n)
    return recon + params.beta * kl, recon, kl


def vae_loss_and_grads(
    params: VaeParams,
    x: np.ndarray,
    eps: np.ndarray,
) -> tuple[float, float, float, nets.MlpGrads, nets.MlpGrads]:
    """Full hand-written backward pass through decoder, reparameterization,
    KL, and encoder. Returns (loss, recon, kl, enc_grads, dec_grads)."""
    d = params.latent_dim
    n = len(x)
    enc_out, enc_cache = mlp_forward(params.encoder, x)
    mean, logvar = enc_out[:, :d], enc_out[:, d:]
    std = np.exp(0.5 * logvar)
    z = mean + std * eps
    xhat, dec_cache = mlp_forward(params.decoder, z)

    recon = float(0.5 * np.sum((xhat - x) ** 2) / n)
    kl = float(-0.5 * np.sum(1.0 + logvar - mean**2 - np.exp(logvar)) / n)
    loss = recon + params.beta * kl
    if not np.isfinite(loss):
        raise FloatingPointError(f"vae loss diverged: {loss}")

    dxhat = (xhat - x) / n
    dec_grads, dz = mlp_backward(params.decoder, dec_cache, dxhat)
    dmean = dz + params.beta * mean / n
    dlogvar = dz * eps * 0.5 * std + params.beta * 0.5 * (np.exp(logvar) - 1.0) / n
    enc_grads, _ = mlp_backward(params.encoder, enc_cache, np.concatenate([dmean, dlogvar], axis=1))
    return loss, recon, kl, enc_grads, dec_grads


def pretrain(
    params: VaeParams,
    dataset: np.ndarray,
    epochs: int,
    lr: float,
    rng: np.random.Generator,
    batch_size: int = 64,
) -> tuple[VaeParams, list[float]]:
    """Minibatch-Adam VAE training; freezes the weights afterwards.

    Returns the frozen params and the per-epoch mean training loss.
    """
    x_all = _as_batch(dataset, params.image_dim)
    if len(x_all) == 0:
        raise ValueError("empty pretraining dataset")
    enc_opt = AdamState.for_net(params.encoder)
    dec_opt = AdamState.for_net(params.decoder)
    history = []
    for _ in range(epochs):
        order = rng.permutation(len(x_all))
        losses = []
        for start in range(0, len(x_all), batch_size):
            idx = order[start : start + batch_size]
            x = x_all[idx]
            eps = rng.standard_normal((len(x), params.latent_dim))
            loss, _, _, enc_grads, dec_grads = vae_loss_and_grads(params, x, eps)
            adam_step(params.encoder, enc_grads, enc_opt, lr)
            adam_step(params.decoder, dec_grads, dec_opt, lr)
            losses.append(loss)
        history.append(float(np.mean(losses)))
    params.freeze()
    return params, history


def encode(params: VaeParams, image: np.ndarray, rng: np.random.Generator | None = None) -> LatentCode:
    """Deterministic mean/logvar; draws a reparameterized sample only when an
    rng is supplied (the policy consumes the mean)."""
    x = _as_batch(image, params.image_dim)
    enc_out, _ = mlp_forward(params.encoder, x)
    d = params.latent_dim
    mean, logvar = enc_out[0, :d], enc_out[0, d:]
    if rng is None:
        eps = np.zeros_like(mean)
    else:
        eps = rng.standard_normal(mean.shape)
    sample = mean + np.exp(0.5 * logvar) * eps
    return LatentCode(mean=mean, logvar=logvar, sample=sample, eps=eps)


def feature_fn_from(params: VaeParams):
    """The frozen-encoder feature extractor handed to the environment."""

    def features(image: np.ndarray) -> np.ndarray:
        return encode(params, image).mean

    return features


# --- visual reward classifier ------------------------------------------------


@dataclass(frozen=True)
class RewardClassifier:
    weights: np.ndarray
    bias: float
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be inside (0, 1)")


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def classifier_fit(
    latents: np.ndarray,
    labels: np.ndarray,
    l2: float = 1e-3,
    iters: int = 200,
    threshold: float = 0.5,
) -> RewardClassifier:
    """Ridge-regularized logistic regression by Newton iteration.

    Features are standardized internally and the scaling folded back into
    (weights, bias), so prediction works on raw latents.
    """
    z = np.asarray(latents, dtype=float)
    y = np.asarray(labels, dtype=float)
    if z.ndim != 2 or len(z) != len(y):
        raise ValueError("latents must be (n, d) with one label per row")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least one example of each class to fit")

    mu = z.mean(axis=0)
    sd = z.std(axis=0)
    sd[sd < 1e-12] = 1.0
    zs = (z - mu) / sd
    xb = np.concatenate([zs, np.ones((len(zs), 1))], axis=1)
    w = np.zeros(xb.shape[1])
    reg = l2 * np.eye(xb.shape[1])
    reg[-1, -1] = 0.0  # do not shrink the bias
    for _ in range(iters):
        p = _sigmoid(xb @ w)
        g = xb.T @ (p - y) + reg @ w
        r = np.clip(p * (1 - p), 1e-9, None)
        h = (xb * r[:, None]).T @ xb + reg
        step = np.linalg.solve(h, g)
        w = w - step
        if np.max(np.abs(step)) < 1e-10:
            break
    w_std, b_std = w[:-1], w[-1]
    weights = w_std / sd
    bias = float(b_std - np.sum(w_std * mu / sd))
    return RewardClassifier(weights=weights, bias=bias, threshold=threshold)


def classifier_predict(c: RewardClassifier, latent: np.ndarray) -> float:
    """Success probability in [0, 1] for one latent vector."""
    t = float(np.dot(c.weights, np.asarray(latent, dtype=float)) + c.bias)
    return float(_sigmoid(np.array([t]))[0])


def classifier_reward(c: RewardClassifier, latent: np.ndarray) -> int:
    return int(classifier_predict(c, latent) >= c.threshold)


# --- checkpointing (same container style as agent checkpoints) ---------------


def vae_to_dict(params: VaeParams) -> dict:
    return {
        "format": "insertrl-vae-checkpoint-v1",
        "beta": params.beta,
        "latent_dim": params.latent_dim,
        "nets": {
            "encoder": nets.mlp_to_dict(params.encoder),
            "decoder": nets.mlp_to_dict(params.decoder),
        },
    }


def vae_from_dict(d: dict) -> VaeParams:
    if d.get("format") != "insertrl-vae-checkpoint-v1":
        raise ValueError(f"unrecognized checkpoint format {d.get('format')!r}")
    return VaeParams(
        nets.mlp_from_dict(d["nets"]["encoder"]),
        nets.mlp_from_dict(d["nets"]["decoder"]),
        float(d["beta"]),
        int(d["latent_dim"]),
    )


def save_vae(params: VaeParams, path: str | Path) -> None:
    Path(path).write_text(json.dumps(vae_to_dict(params)))


def load_vae(path: str | Path, frozen: bool = True) -> VaeParams:
    params = vae_from_dict(json.loads(Path(path).read_text()))
    if frozen:
        params.freeze()
    return params


def classifier_to_dict(c: RewardClassifier) -> dict:
    return {
        "format": "insertrl-reward-classifier-v1",
        "weights": nets.encode_array(c.weights),
        "bias": c.bias,
        "threshold": c.threshold,
    }


def classifier_from_dict(d: dict) -> RewardClassifier:
    return RewardClassifier(
        weights=nets.decode_array(d["weights"]),
        bias=float(d["bias"]),
        threshold=float(d["threshold"]),
    )
