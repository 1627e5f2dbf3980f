"""Demonstration-seeded deterministic actor-critic learner.

Key departures from vanilla DDPG, all load-bearing here:
  - the acting policy is exactly the actor output: no exploration noise;
  - the replay buffer never evicts and is sampled uniformly, so demo,
    correction, and agent transitions are all treated identically;
  - human overrides replace the executed action and are stored as ordinary
    experience with a provenance tag only.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nets
from .nets import AdamState, Mlp, MlpGrads, adam_step, init_mlp, mlp_backward, mlp_forward, polyak_update

SOURCES = ("agent", "demo", "correction")


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool
    source: str = "agent"

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.obs.shape != self.next_obs.shape:
            raise ValueError("obs/next_obs dimension mismatch")


@dataclass
class Batch:
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray


class ReplayBuffer:
    """Append-only uniform-replay store.

    Never evicts or reweights. Appends are locked; sampling reads a
    consistent snapshot of (arrays, size) without blocking appenders.
    """

    def __init__(self, obs_dim: int, act_dim: int = 3, initial_capacity: int = 4096):
        self._lock = threading.Lock()
        self._size = 0
        self._demo_count = 0
        cap = max(int(initial_capacity), 1)
        self._obs = np.zeros((cap, obs_dim))
        self._act = np.zeros((cap, act_dim))
        self._rew = np.zeros(cap)
        self._next_obs = np.zeros((cap, obs_dim))
        self._done = np.zeros(cap, dtype=bool)
        self._source = np.zeros(cap, dtype=np.int8)

    def __len__(self) -> int:
        return self._size

    @property
    def demo_count(self) -> int:
        return self._demo_count

    def _grow(self, need: int) -> None:
        cap = self._obs.shape[0]
        if need <= cap:
            return
        new_cap = max(need, cap * 2)
        for name in ("_obs", "_act", "_rew", "_next_obs", "_done", "_source"):
            old = getattr(self, name)
            new = np.zeros((new_cap,) + old.shape[1:], dtype=old.dtype)
            new[: self._size] = old[: self._size]
            setattr(self, name, new)

    def append(self, t: Transition) -> None:
        with self._lock:
            if t.source == "demo":
                self._demo_count += 1
            i = self._size
            self._grow(i + 1)
            self._obs[i] = t.obs
            self._act[i] = t.action
            self._rew[i] = t.reward
            self._next_obs[i] = t.next_obs
            self._done[i] = t.done
            self._source[i] = SOURCES.index(t.source)
            self._size = i + 1

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        # snapshot refs first: growth swaps arrays but never mutates old ones
        obs, act, rew, nxt, done = self._obs, self._act, self._rew, self._next_obs, self._done
        size = self._size
        if size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        size = min(size, obs.shape[0])
        idx = rng.integers(0, size, size=batch_size)
        return Batch(obs[idx], act[idx], rew[idx], nxt[idx], done[idx])

    def source_counts(self) -> dict[str, int]:
        with self._lock:
            vals = self._source[: self._size]
            return {name: int(np.sum(vals == i)) for i, name in enumerate(SOURCES)}


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 256
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    hidden_sizes: tuple[int, ...] = (256, 256)
    # with a {0,1} terminal reward the true value lies in [0,1]; clipping TD
    # targets to that provable range blocks the critic-overestimation spiral
    # that otherwise collapses sparse-reward runs. None disables.
    target_clip: tuple[float, float] | None = (0.0, 1.0)

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        for name in ("batch_size", "actor_lr", "critic_lr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.target_clip is not None and self.target_clip[0] >= self.target_clip[1]:
            raise ValueError("target_clip must be an increasing (lo, hi) pair")


def forward_actor(actor: Mlp, obs: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Deterministic policy: bounds * tanh(mlp(obs)). No noise, ever."""
    single = obs.ndim == 1
    x = obs[None, :] if single else obs
    y, _ = mlp_forward(actor, x)
    a = y * bounds
    return a[0] if single else a


def forward_critic(critic: Mlp, obs: np.ndarray, action: np.ndarray) -> np.ndarray:
    q, _ = mlp_forward(critic, np.concatenate([obs, action], axis=1))
    return q[:, 0]


def bellman_targets(
    batch: Batch,
    actor_target: Mlp,
    critic_target: Mlp,
    gamma: float,
    bounds: np.ndarray,
) -> np.ndarray:
    """y = r + gamma * (1 - done) * Q'(s', pi'(s')).

    Terminal transitions do not bootstrap; with a sparse terminal reward the
    target there is the reward itself.
    """
    next_a = forward_actor(actor_target, batch.next_obs, bounds)
    next_q = forward_critic(critic_target, batch.next_obs, next_a)
    return batch.reward + gamma * (1.0 - batch.done.astype(float)) * next_q


def critic_update(
    critic: Mlp,
    opt: AdamState,
    batch: Batch,
    targets: np.ndarray,
    lr: float,
) -> float:
    """One mean-squared TD-error gradient step. Returns the loss."""
    x = np.concatenate([batch.obs, batch.action], axis=1)
    q, cache = mlp_forward(critic, x)
    err = q[:, 0] - targets
    loss = float(np.mean(err**2))
    if not np.isfinite(loss):
        raise FloatingPointError(f"critic loss diverged: {loss}")
    dout = (2.0 * err / len(err))[:, None]
    grads, _ = mlp_backward(critic, cache, dout)
    adam_step(critic, grads, opt, lr)
    return loss


def actor_update(
    actor: Mlp,
    opt: AdamState,
    critic: Mlp,
    obs: np.ndarray,
    bounds: np.ndarray,
    lr: float,
) -> float:
    """Deterministic policy-gradient ascent on mean_s Q(s, pi(s)).

    The critic is held fixed; its action-input gradient is chained through
    the tanh scaling into the actor. Returns the objective value.
    """
    raw, actor_cache = mlp_forward(actor, obs)
    action = raw * bounds
    x = np.concatenate([obs, action], axis=1)
    q, critic_cache = mlp_forward(critic, x)
    objective = float(np.mean(q))
    if not np.isfinite(objective):
        raise FloatingPointError(f"actor objective diverged: {objective}")
    # ascend: minimize -mean Q
    dq = np.full_like(q, -1.0 / len(q))
    _, dx = mlp_backward(critic, critic_cache, dq)
    d_action = dx[:, obs.shape[1] :]
    d_raw = d_action * bounds
    grads, _ = mlp_backward(actor, actor_cache, d_raw)
    adam_step(actor, grads, opt, lr)
    return objective


def apply_override(
    agent_action: np.ndarray,
    override: np.ndarray | None,
    bounds: np.ndarray,
) -> tuple[np.ndarray, str, bool]:
    """Substitute a human correction for the agent's action when present.

    Returns (executed action, source tag, clipped flag). Out-of-bounds
    overrides are clipped componentwise and flagged.
    """
    if override is None:
        return agent_action, "agent", False
    override = np.asarray(override, dtype=float)
    clipped = np.clip(override, -bounds, bounds)
    was_clipped = bool(np.any(clipped != override))
    return clipped, "correction", was_clipped


@dataclass
class PolicySnapshot:
    """Immutable actor copy the collector acts with; the learner publishes
    fresh snapshots atomically (a reference swap)."""

    actor: Mlp
    bounds: np.ndarray
    version: int = 0

    def act(self, obs_vec: np.ndarray) -> np.ndarray:
        return forward_actor(self.actor, obs_vec, self.bounds)


class DdpgfdAgent:
    """Owns the four networks, their optimizers, and the replay buffer."""

    def __init__(self, obs_dim: int, act_dim: int, config: AgentConfig, seed: int):
        self.config = config
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
        sizes_a = [obs_dim, *config.hidden_sizes, act_dim]
        sizes_c = [obs_dim + act_dim, *config.hidden_sizes, 1]
        acts_hidden = ["relu"] * len(config.hidden_sizes)
        self.actor = init_mlp(sizes_a, acts_hidden + ["tanh"], rng)
        self.critic = init_mlp(sizes_c, acts_hidden + ["linear"], rng)
        self.actor_target = self.actor.clone()
        self.critic_target = self.critic.clone()
        self.actor_opt = AdamState.for_net(self.actor)
        self.critic_opt = AdamState.for_net(self.critic)
        self.replay = ReplayBuffer(obs_dim, act_dim)
        self.train_steps = 0
        self._snapshot_lock = threading.Lock()
        self._snapshot: PolicySnapshot | None = None

    def learn_step(self, rng: np.random.Generator, bounds: np.ndarray) -> tuple[float, float]:
        """One critic + one actor gradient step and a Polyak target update."""
        batch = self.replay.sample(self.config.batch_size, rng)
        targets = bellman_targets(batch, self.actor_target, self.critic_target, self.config.gamma, bounds)
        if self.config.target_clip is not None:
            targets = np.clip(targets, *self.config.target_clip)
        critic_loss = critic_update(self.critic, self.critic_opt, batch, targets, self.config.critic_lr)
        objective = actor_update(self.actor, self.actor_opt, self.critic, batch.obs, bounds, self.config.actor_lr)
        polyak_update(self.actor, self.actor_target, self.config.tau)
        polyak_update(self.critic, self.critic_target, self.config.tau)
        self.train_steps += 1
        return critic_loss, objective

    def publish_snapshot(self, bounds: np.ndarray) -> PolicySnapshot:
        snap = PolicySnapshot(self.actor.clone(), np.array(bounds, dtype=float), self.train_steps)
        with self._snapshot_lock:
            self._snapshot = snap
        return snap

    def current_snapshot(self) -> PolicySnapshot:
        with self._snapshot_lock:
            if self._snapshot is None:
                raise RuntimeError("no policy snapshot published yet")
            return self._snapshot

    # --- checkpointing ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "insertrl-agent-checkpoint-v1",
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "config": {
                "gamma": self.config.gamma,
                "tau": self.config.tau,
                "batch_size": self.config.batch_size,
                "actor_lr": self.config.actor_lr,
                "critic_lr": self.config.critic_lr,
                "hidden_sizes": list(self.config.hidden_sizes),
                "target_clip": list(self.config.target_clip) if self.config.target_clip else None,
            },
            "train_steps": self.train_steps,
            "nets": {
                "actor": nets.mlp_to_dict(self.actor),
                "critic": nets.mlp_to_dict(self.critic),
                "actor_target": nets.mlp_to_dict(self.actor_target),
                "critic_target": nets.mlp_to_dict(self.critic_target),
            },
            "optim": {
                "actor": nets.adam_to_dict(self.actor_opt),
                "critic": nets.adam_to_dict(self.critic_opt),
            },
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_dict(cls, d: dict) -> "DdpgfdAgent":
        if d.get("format") != "insertrl-agent-checkpoint-v1":
            raise ValueError(f"unrecognized checkpoint format {d.get('format')!r}")
        cfg = d["config"]
        agent = cls(
            int(d["obs_dim"]),
            int(d["act_dim"]),
            AgentConfig(
                gamma=cfg["gamma"],
                tau=cfg["tau"],
                batch_size=cfg["batch_size"],
                actor_lr=cfg["actor_lr"],
                critic_lr=cfg["critic_lr"],
                hidden_sizes=tuple(cfg["hidden_sizes"]),
                target_clip=tuple(cfg["target_clip"]) if cfg.get("target_clip") else None,
            ),
            seed=0,
        )
        agent.actor = nets.mlp_from_dict(d["nets"]["actor"])
        agent.critic = nets.mlp_from_dict(d["nets"]["critic"])
        agent.actor_target = nets.mlp_from_dict(d["nets"]["actor_target"])
        agent.critic_target = nets.mlp_from_dict(d["nets"]["critic_target"])
        agent.actor_opt = nets.adam_from_dict(d["optim"]["actor"])
        agent.critic_opt = nets.adam_from_dict(d["optim"]["critic"])
        agent.train_steps = int(d["train_steps"])
        return agent

    @classmethod
    def load(cls, path: str | Path) -> "DdpgfdAgent":
        return cls.from_dict(json.loads(Path(path).read_text()))
