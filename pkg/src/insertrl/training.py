"""Training and evaluation loops binding simulator, learner, and curriculum.

The collector rolls episodes with the latest policy snapshot, the learner
takes gradient steps against the shared replay buffer. In synchronous mode
(the default, and the only mode used for acceptance runs) the two interleave
deterministically in one thread, so a (config, seed) pair fully determines
every parameter and metric. Asynchronous mode runs the learner in its own
thread, publishing policy snapshots the collector picks up between episodes.

A teleoperation service can be attached; the collector consults it every
tick for overrides / demo-mode actions and never blocks on it.
"""

from __future__ import annotations

import dataclasses
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import frames
from .agent import DdpgfdAgent, PolicySnapshot, Transition, apply_override
from .baselines import make_demo_expert
from .config import RunConfig
from .curriculum import CurriculumState, advance_task, max_curriculum
from .datalog import (
    EpisodeRecord,
    EpisodeWriter,
    StepRecord,
    SuccessReport,
    SuccessRow,
    episode_transitions,
    geometry_hash,
    observation_from_dict,
    observation_to_dict,
    read_dataset,
)
from .sim import (
    Geometry,
    InsertionEnv,
    Observation,
    TaskConfig,
    TaskKind,
    TerminationReason,
    observation_dim,
)
from .sim.types import observation_scales
from .vision import RewardClassifier, classifier_reward, feature_fn_from, load_vae


def episode_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1, np.uint64)[0])


def build_env(cfg: RunConfig, anchor: frames.Pose = frames.IDENTITY) -> tuple[InsertionEnv, int]:
    """Construct the environment (wiring the frozen encoder for vision
    modalities) and report the observation width."""
    feature_fn = None
    latent_dim = 0
    from .sim.types import modality_uses_vision

    if modality_uses_vision(cfg.task.modality):
        if not cfg.vae_checkpoint:
            raise ValueError("vision modality requires run.vae_checkpoint")
        vae = load_vae(cfg.vae_checkpoint)
        feature_fn = feature_fn_from(vae)
        latent_dim = vae.latent_dim
    env = InsertionEnv(cfg.task, cfg.geometry, anchor=anchor, feature_fn=feature_fn)
    return env, observation_dim(cfg.task.modality, latent_dim)


def task_with_socket_speed(task: TaskConfig, speed: float) -> TaskConfig:
    if task.kind is not TaskKind.MOVING_SOCKET:
        return task
    return dataclasses.replace(task, motion=dataclasses.replace(task.motion, max_speed=speed))


# --- rollouts -----------------------------------------------------------------


@dataclass
class RolloutResult:
    success: bool
    reason: TerminationReason
    steps: int
    reward: int
    record: EpisodeRecord


def rollout_episode(
    env: InsertionEnv,
    policy,
    bounds: np.ndarray,
    seed: int,
    pose_rand: tuple[float, float, float],
    offset_bound_b: float,
    source: str = "agent",
    curriculum_snapshot: dict | None = None,
    condition: str = "eval",
    forced_blind_offset: float | None = None,
    log_privileged: bool = True,
) -> RolloutResult:
    """Run one episode without learning and package it as an EpisodeRecord."""
    obs = env.reset(
        seed=seed,
        pose_rand=pose_rand,
        offset_bound_b=offset_bound_b,
        forced_blind_offset=forced_blind_offset,
    )
    if hasattr(policy, "reset"):
        policy.reset()
    steps: list[StepRecord] = []
    steps.append(_step_record(0, obs, np.zeros(3), 0, False, source, env, log_privileged))
    res = None
    for _ in range(env.task.max_steps):
        # record what was actually executed: bounds clipping is part of the env
        action = np.clip(np.asarray(policy(obs), dtype=float), -bounds, bounds)
        res = env.step(action, bounds)
        obs = res.obs
        steps.append(
            _step_record(res.state.tick, obs, action, res.reward, res.done, source, env, log_privileged)
        )
        if res.done:
            break
    curriculum_snapshot = dict(curriculum_snapshot or {})
    curriculum_snapshot["condition"] = condition
    record = EpisodeRecord(
        task_kind=env.task.kind.value,
        modality=env.task.modality.value,
        geometry_hash=geometry_hash(env.geom),
        curriculum=curriculum_snapshot,
        seed=seed,
        timestamp=0.0,
        steps=tuple(steps),
        termination_reason=res.reason.value,
        success=res.reason is TerminationReason.SUCCESS,
        duration_s=res.state.tick * env.task.dt,
    )
    return RolloutResult(record.success, res.reason, res.state.tick, res.reward, record)


def _step_record(tick, obs: Observation, action, reward, done, source, env, log_privileged) -> StepRecord:
    [true_pose] = [list(env.state.peg_pose.as_tuple())] if log_privileged else [None]
    wrench = obs.wrench.as_array().tolist() if obs.wrench is not None else [0.0, 0.0, 0.0]
    return StepRecord(
        tick=int(tick),
        observation=observation_to_dict(obs),
        action=[float(a) for a in np.asarray(action, dtype=float)],
        reward=int(reward),
        done=bool(done),
        source=source,
        wrench=wrench,
        true_pose=true_pose,
    )


# --- demonstrations -----------------------------------------------------------


def collect_scripted_demos(
    cfg: RunConfig,
    n_success: int,
    base_seed: int,
    writer: EpisodeWriter | None = None,
    max_attempts_factor: int = 4,
) -> list[EpisodeRecord]:
    """Run the scripted demonstrator until n_success successful episodes.

    Demos run at terminal-curriculum difficulty so they exhibit the full
    strategy; failures (possible under action noise) are dropped, mirroring
    a human operator discarding botched demonstrations.
    """
    env, _ = build_env(cfg)
    curr = max_curriculum(cfg.schedule)
    task = task_with_socket_speed(cfg.task, curr.socket_speed)
    env.task = task
    bounds = curr.action_bounds
    records: list[EpisodeRecord] = []
    attempt = 0
    while len(records) < n_success and attempt < max_attempts_factor * n_success:
        expert = make_demo_expert(
            env, cfg.effective_demo_reach, noise_scale=cfg.demo_noise, seed=base_seed + attempt
        )
        result = rollout_episode(
            env,
            expert,
            bounds,
            seed=episode_seed(base_seed, attempt),
            pose_rand=curr.pose_rand,
            offset_bound_b=curr.offset_bound_b,
            source="demo",
            curriculum_snapshot=curr.snapshot(),
            condition="demo",
        )
        attempt += 1
        if result.success:
            records.append(result.record)
            if writer is not None:
                writer.write(result.record)
    if len(records) < n_success:
        raise RuntimeError(
            f"scripted demonstrator produced only {len(records)}/{n_success} successes"
        )
    return records


def load_demo_records(path: str | Path) -> list[EpisodeRecord]:
    return [rec for rec in read_dataset(path) if rec.success]


def demos_into_replay(records: list[EpisodeRecord], agent: DdpgfdAgent, obs_scale: np.ndarray) -> int:
    n = 0
    for rec in records:
        for obs_d, action, reward, next_d, done, _ in episode_transitions(rec, source_override="demo"):
            agent.replay.append(
                Transition(
                    observation_from_dict(obs_d).vector() / obs_scale,
                    np.asarray(action, dtype=float),
                    float(reward),
                    observation_from_dict(next_d).vector() / obs_scale,
                    bool(done),
                    "demo",
                )
            )
            n += 1
    return n


# --- training -----------------------------------------------------------------


@dataclass
class TrainResult:
    checkpoint_path: Path
    episode_log_path: Path
    metrics_path: Path
    metrics: list[dict]
    episodes: int
    env_steps: int
    gradient_steps: int
    final_window_success: float | None
    curriculum_stage: int


def save_policy_checkpoint(path: Path, agent: DdpgfdAgent, cfg: RunConfig, bounds: np.ndarray, latent_dim: int) -> None:
    doc = {
        "format": "insertrl-policy-checkpoint-v1",
        "preset": cfg.preset,
        "modality": cfg.task.modality.value,
        "latent_dim": latent_dim,
        "bounds": [float(b) for b in bounds],
        "obs_scale": [float(v) for v in observation_scales(cfg.task.modality, latent_dim)],
        "vae_checkpoint": cfg.vae_checkpoint,
        "agent": agent.to_dict(),
    }
    path.write_text(json.dumps(doc))


@dataclass
class LoadedPolicy:
    snapshot: PolicySnapshot
    modality: str
    latent_dim: int
    vae_checkpoint: str | None
    obs_scale: np.ndarray

    def __call__(self, obs: Observation) -> np.ndarray:
        return self.snapshot.act(obs.vector() / self.obs_scale)


def load_policy_checkpoint(path: str | Path) -> LoadedPolicy:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "insertrl-policy-checkpoint-v1":
        raise ValueError(f"unrecognized checkpoint format {doc.get('format')!r}")
    agent = DdpgfdAgent.from_dict(doc["agent"])
    snap = PolicySnapshot(agent.actor, np.array(doc["bounds"], dtype=float), agent.train_steps)
    return LoadedPolicy(
        snap,
        doc["modality"],
        int(doc["latent_dim"]),
        doc.get("vae_checkpoint"),
        np.array(doc["obs_scale"], dtype=float),
    )


class Trainer:
    """Collector + learner per the workflow: demos seed the replay buffer,
    the policy rolls out (with optional human correction), gradients run
    against uniformly sampled replay, curriculum advances between episodes."""

    def __init__(self, cfg: RunConfig, service=None):
        self.cfg = cfg
        self.service = service
        self.env, self.obs_dim = build_env(cfg)
        self.latent_dim = self.obs_dim - observation_dim(cfg.task.modality, 0)
        self.obs_scale = observation_scales(cfg.task.modality, self.latent_dim)
        self.agent = DdpgfdAgent(self.obs_dim, 3, cfg.agent, seed=cfg.seed)
        self.curriculum = CurriculumState(cfg.schedule)
        self.learner_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xBEEF]))
        self.out_dir = Path(cfg.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.classifier: RewardClassifier | None = None
        if cfg.reward_from_classifier:
            if not cfg.classifier_checkpoint:
                raise ValueError("reward_from_classifier requires run.classifier_checkpoint")
            from .vision import classifier_from_dict

            self.classifier = classifier_from_dict(json.loads(Path(cfg.classifier_checkpoint).read_text()))
        self._stop_learner = threading.Event()
        self._gradient_steps = 0
        self._learner_error: BaseException | None = None

    # -- demo seeding --------------------------------------------------------

    def seed_demos(self, demo_writer: EpisodeWriter | None = None) -> int:
        cfg = self.cfg
        if cfg.demo_source == "scripted":
            # n_demos == 0 is the deliberate pure-RL ablation
            records = collect_scripted_demos(cfg, cfg.n_demos, cfg.seed, writer=demo_writer) if cfg.n_demos else []
        elif cfg.demo_source == "file":
            records = load_demo_records(cfg.demo_file)
            if not records:
                raise RuntimeError(f"no successful demo episodes in {cfg.demo_file}")
        else:  # teleop: demos are recorded live through the service
            records = []
        return demos_into_replay(records, self.agent, self.obs_scale)

    # -- learner -------------------------------------------------------------

    def _learn_one(self, bounds: np.ndarray) -> float:
        loss, _ = self.agent.learn_step(self.learner_rng, bounds)
        self._gradient_steps += 1
        return loss

    def _async_learner(self, bounds_ref):
        try:
            while not self._stop_learner.is_set():
                if len(self.agent.replay) >= self.cfg.agent.batch_size:
                    self._learn_one(bounds_ref())
                    if self._gradient_steps % 50 == 0:
                        self.agent.publish_snapshot(bounds_ref())
                else:
                    time.sleep(0.001)
        except BaseException as e:  # propagate into the main thread
            self._learner_error = e

    # -- main loop -----------------------------------------------------------

    def train(self) -> TrainResult:
        cfg = self.cfg
        log_path = self.out_dir / "episodes.eplog"
        metrics_path = self.out_dir / "metrics.jsonl"
        ckpt_path = self.out_dir / "checkpoint.json"
        metrics: list[dict] = []
        t_start = time.monotonic()

        with EpisodeWriter(log_path) as ep_writer, open(metrics_path, "w") as mf:
            n_demo_transitions = self.seed_demos()
            if cfg.demo_source != "teleop" and cfg.n_demos > 0 and n_demo_transitions == 0:
                raise RuntimeError("training requires at least one successful demonstration")

            env_steps = 0
            episode_idx = 0
            learner_debt = 0.0
            window: list[int] = []
            bounds = self.curriculum.action_bounds
            self.agent.publish_snapshot(bounds)

            learner_thread = None
            if not cfg.synchronous:
                learner_thread = threading.Thread(
                    target=self._async_learner, args=(lambda: self.curriculum.action_bounds,), daemon=True
                )
                learner_thread.start()

            try:
                while env_steps < cfg.max_env_steps and time.monotonic() - t_start < cfg.max_wall_seconds:
                    bounds = self.curriculum.action_bounds
                    self.env.task = task_with_socket_speed(cfg.task, self.curriculum.socket_speed)
                    snapshot = self.agent.publish_snapshot(bounds) if cfg.synchronous else self.agent.current_snapshot()
                    ep = self._run_training_episode(snapshot, bounds, episode_idx, env_steps)
                    env_steps += ep["steps"]
                    learner_debt += ep["steps"] * cfg.learner_steps_per_env_step
                    if cfg.synchronous:
                        last_loss = None
                        while learner_debt >= 1.0 and len(self.agent.replay) >= cfg.agent.batch_size:
                            last_loss = self._learn_one(bounds)
                            learner_debt -= 1.0
                        if last_loss is not None:
                            ep["critic_loss"] = last_loss
                    if self._learner_error is not None:
                        raise self._learner_error

                    if ep["mode"] == "agent":
                        self.curriculum.record_episode(ep["success"])
                        window.append(int(ep["success"]))
                        self.curriculum = advance_task(self.curriculum)
                    ep_writer.write(ep.pop("record"))
                    ep.update(env_steps=env_steps, gradient_steps=self._gradient_steps)
                    metrics.append(ep)
                    mf.write(json.dumps({k: v for k, v in ep.items()}) + "\n")
                    episode_idx += 1
                    if episode_idx % cfg.checkpoint_every_episodes == 0:
                        save_policy_checkpoint(ckpt_path, self.agent, cfg, bounds, self.latent_dim)
            except FloatingPointError as e:
                # training halt on divergence; the periodic checkpoint on disk
                # is the last-good state
                raise RuntimeError(
                    f"training diverged ({e}); last-good checkpoint at {ckpt_path}"
                ) from e
            finally:
                self._stop_learner.set()
                if learner_thread is not None:
                    learner_thread.join(timeout=5.0)

            save_policy_checkpoint(ckpt_path, self.agent, cfg, self.curriculum.action_bounds, self.latent_dim)

        tail = [m["success"] for m in metrics if m["mode"] == "agent"][-cfg.schedule.window :]
        return TrainResult(
            checkpoint_path=ckpt_path,
            episode_log_path=log_path,
            metrics_path=metrics_path,
            metrics=metrics,
            episodes=episode_idx,
            env_steps=env_steps,
            gradient_steps=self._gradient_steps,
            final_window_success=(sum(tail) / len(tail)) if tail else None,
            curriculum_stage=self.curriculum.stage,
        )

    def _run_training_episode(self, snapshot: PolicySnapshot, bounds: np.ndarray, episode_idx: int, env_steps: int) -> dict:
        cfg = self.cfg
        seed = episode_seed(cfg.seed, episode_idx + 1_000_000)
        obs = self.env.reset(
            seed=seed,
            pose_rand=self.curriculum.pose_rand,
            offset_bound_b=self.curriculum.offset_bound_b,
        )
        steps = [_step_record(0, obs, np.zeros(3), 0, False, "agent", self.env, True)]
        mode = "agent"
        episode_is_demo: bool | None = None  # demo mode latches at the first tick
        ep_reward = 0
        clipped_overrides = 0
        next_deadline = time.monotonic() + cfg.task.dt
        res = None
        for _ in range(cfg.task.max_steps):
            tele = self.service.poll() if self.service else None
            if tele is not None and tele.reset_requested:
                break
            if episode_is_demo is None:
                episode_is_demo = tele is not None and tele.mode == "demo"
            if episode_is_demo:
                effective_mode = "demo"
            elif tele is not None and tele.mode == "correcting":
                effective_mode = "correcting"
            else:
                effective_mode = "observe"
            if self.service is not None:
                self.service.tick(self._frame_dict(obs, episode_idx), effective_mode=effective_mode)
            if episode_is_demo:
                mode = "demo"
                action = tele.action if (tele is not None and tele.action is not None) else np.zeros(3)
                executed = np.clip(action, -bounds, bounds)
                source = "demo"
            else:
                agent_action = snapshot.act(obs.vector() / self.obs_scale)
                override = tele.action if (tele is not None and tele.mode == "correcting") else None
                executed, source, was_clipped = apply_override(agent_action, override, bounds)
                clipped_overrides += int(was_clipped)
            res = self.env.step(executed, bounds)
            reward = res.reward
            if self.classifier is not None and res.obs.latent is not None:
                reward = classifier_reward(self.classifier, res.obs.latent) if res.done else 0
            self.agent.replay.append(
                Transition(
                    obs.vector() / self.obs_scale,
                    np.asarray(executed, dtype=float),
                    float(reward),
                    res.obs.vector() / self.obs_scale,
                    res.done,
                    source,
                )
            )
            ep_reward += reward
            steps.append(_step_record(res.state.tick, res.obs, executed, reward, res.done, source, self.env, True))
            obs = res.obs
            if self.service is not None and self.service.has_client():
                # hold the 20 Hz control rate for the human in the loop
                now = time.monotonic()
                if next_deadline > now:
                    time.sleep(next_deadline - now)
                next_deadline = max(next_deadline + cfg.task.dt, now)
            else:
                next_deadline = time.monotonic() + cfg.task.dt
            if res.done:
                break

        if res is None or not res.done:
            # client reset request mid-episode: close the record as a timeout
            reason = TerminationReason.TIMEOUT
            success = False
            tick = steps[-1].tick
            steps[-1] = dataclasses.replace(steps[-1], done=True)
        else:
            reason = res.reason
            success = res.reason is TerminationReason.SUCCESS
            tick = res.state.tick
        snap = self.curriculum.snapshot()
        snap["condition"] = "train"
        record = EpisodeRecord(
            task_kind=cfg.task.kind.value,
            modality=cfg.task.modality.value,
            geometry_hash=geometry_hash(cfg.geometry),
            curriculum=snap,
            seed=seed,
            timestamp=time.time(),
            steps=tuple(steps),
            termination_reason=reason.value,
            success=success,
            duration_s=tick * cfg.task.dt,
        )
        if self.service is not None:
            self.service.episode_finished(episode_idx, record.success)
        return {
            "episode": episode_idx,
            "seed": seed,
            "mode": mode,
            "success": success,
            "reason": reason.value,
            "steps": tick,
            "reward": ep_reward,
            "stage": self.curriculum.stage,
            "clipped_overrides": clipped_overrides,
            "record": record,
        }

    def _frame_dict(self, obs: Observation, episode_idx: int) -> dict:
        state = self.env.state
        rel = obs.rel_pose
        frame = {
            "type": "frame",
            "tick": state.tick,
            "episode_id": episode_idx,
            "rel_pose": list(rel.as_tuple()) if rel is not None else None,
            "twist": obs.twist.as_array().tolist(),
            "wrench": obs.wrench.as_array().tolist() if obs.wrench is not None else [0, 0, 0],
            "bounds": [float(b) for b in self.curriculum.action_bounds],
        }
        if self.service is not None and self.service.wants_image():
            from .sim.render import render
            from .teleop import encode_image_png

            frame["image"] = encode_image_png(render(state, self.cfg.geometry))
        return frame


def train(cfg: RunConfig, service=None) -> TrainResult:
    return Trainer(cfg, service=service).train()


# --- evaluation ---------------------------------------------------------------


@dataclass
class EvalResult:
    report: SuccessReport
    outcomes: list[bool]
    reasons: list[str]
    mean_success_ticks: float | None
    records: list[EpisodeRecord] = field(default_factory=list)


def evaluate_policy(
    policy,
    env: InsertionEnv,
    bounds: np.ndarray,
    n_episodes: int,
    pose_rand: tuple[float, float, float],
    offset_bound_b: float = 0.0,
    base_seed: int = 424242,
    condition: str = "eval",
    keep_records: bool = False,
) -> EvalResult:
    """Deterministic rollouts; never touches any replay buffer."""
    outcomes: list[bool] = []
    reasons: list[str] = []
    ticks: list[int] = []
    records: list[EpisodeRecord] = []
    for i in range(n_episodes):
        result = rollout_episode(
            env,
            policy,
            bounds,
            seed=episode_seed(base_seed, i),
            pose_rand=pose_rand,
            offset_bound_b=offset_bound_b,
            condition=condition,
        )
        outcomes.append(result.success)
        reasons.append(result.reason.value)
        if result.success:
            ticks.append(result.steps)
        if keep_records:
            records.append(result.record)
    label = f"{env.task.kind.value}+{env.task.modality.value}+{condition}"
    report = SuccessReport([SuccessRow(label, sum(outcomes), len(outcomes))])
    return EvalResult(
        report=report,
        outcomes=outcomes,
        reasons=reasons,
        mean_success_ticks=float(np.mean(ticks)) if ticks else None,
        records=records,
    )


def evaluate_checkpoint(
    checkpoint_path: str | Path,
    cfg: RunConfig,
    n_episodes: int,
    pose_rand: tuple[float, float, float] | None = None,
    offset_bound_b: float | None = None,
    socket_speed: float | None = None,
    anchor: frames.Pose = frames.IDENTITY,
    base_seed: int = 424242,
    condition: str = "eval",
    keep_records: bool = False,
) -> EvalResult:
    policy = load_policy_checkpoint(checkpoint_path)
    if policy.modality != cfg.task.modality.value:
        raise ValueError(
            f"checkpoint modality {policy.modality!r} does not match task {cfg.task.modality.value!r}"
        )
    env, _ = build_env(cfg, anchor=anchor)
    terminal = max_curriculum(cfg.schedule)
    env.task = task_with_socket_speed(cfg.task, socket_speed if socket_speed is not None else terminal.socket_speed)
    return evaluate_policy(
        policy,
        env,
        policy.snapshot.bounds,
        n_episodes,
        pose_rand=pose_rand if pose_rand is not None else terminal.pose_rand,
        offset_bound_b=offset_bound_b if offset_bound_b is not None else terminal.offset_bound_b,
        base_seed=base_seed,
        condition=condition,
        keep_records=keep_records,
    )


# --- vision pretraining pipeline -----------------------------------------------


def collect_jog_frames(
    cfg: RunConfig,
    n_frames: int,
    seed: int,
    include_insertion: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Render workspace-coverage frames (the remote-jog dataset) plus scripted
    insertion frames, labeled by the ground-truth success predicate.

    Returns (frames, labels): frames are flattened [0,1] rasters; labels mark
    states that satisfy the success condition (used for the reward
    classifier; the VAE ignores them).
    """
    from .sim import check_success
    from .sim.render import render
    from .sim.types import Modality

    # observations are irrelevant here; collect against a proprio view of the task
    env = InsertionEnv(dataclasses.replace(cfg.task, modality=Modality.PROPRIO), cfg.geometry)
    env.reset(seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x715]))
    ws = cfg.task.workspace
    frames_list: list[np.ndarray] = []
    labels: list[int] = []

    def snap(state):
        frames_list.append(render(state, cfg.geometry).ravel())
        labels.append(int(check_success(state.peg, state.socket, cfg.geometry, cfg.task)))

    n_insert = n_frames // 4 if include_insertion else 0
    n_far = n_frames // 4
    motion_amp = cfg.task.motion.amplitude if cfg.task.kind is TaskKind.MOVING_SOCKET else 0.0
    # most jog frames concentrate on the task region (the camera has to have
    # seen the socket from everywhere the servo flies), but a quarter covers
    # the whole workspace: the reward classifier must emit confident zeros
    # wherever the policy can terminate, or it invites reward hacking at the
    # edges of its training support
    jog_span = min(0.045, ws.xmax)
    y_lo = max(ws.ymin, cfg.geometry.peg_length - 0.002)
    for i in range(n_frames - n_insert):
        socket_x = rng.uniform(-motion_amp, motion_amp) if motion_amp else 0.0
        if i < n_far:
            px = rng.uniform(ws.xmin, ws.xmax)
            py = rng.uniform(y_lo, ws.ymax)
        else:
            px = socket_x + rng.uniform(-jog_span, jog_span)
            py = rng.uniform(y_lo, min(ws.ymax, 0.09))
        peg = frames.Pose(px, py, rng.uniform(-0.06, 0.06))
        state = dataclasses.replace(
            env.state,
            peg=peg,
            socket=frames.Pose(socket_x, 0.0, 0.0),
        )
        snap(state)
    # sampled insertion/near-insertion states so success views are covered
    for _ in range(n_insert):
        socket_x = rng.uniform(-motion_amp, motion_amp) if motion_amp else 0.0
        depth = rng.uniform(0.2, 1.0) * cfg.task.success_depth * 1.15
        lat = rng.uniform(-1.5, 1.5) * cfg.geometry.clearance / 2
        peg = frames.Pose(
            socket_x + lat,
            cfg.geometry.peg_length - depth,
            rng.uniform(-0.05, 0.05),
        )
        state = dataclasses.replace(env.state, peg=peg, socket=frames.Pose(socket_x, 0.0, 0.0))
        snap(state)
    return np.array(frames_list), np.array(labels)


def pretrain_vae_pipeline(
    cfg: RunConfig,
    n_frames: int,
    epochs: int,
    out_path: str | Path,
    seed: int = 0,
    latent_dim: int = 16,
    hidden: tuple[int, ...] = (128, 128),
    beta: float = 1.0,
    lr: float = 1e-3,
    classifier_out: str | Path | None = None,
):
    """Collect jog frames, pretrain the VAE, optionally fit the visual reward
    classifier on held-in latents; returns (vae, classifier, heldout_agreement)."""
    from .vision import classifier_fit, classifier_predict, classifier_to_dict, encode, init_vae, pretrain, save_vae

    frames_arr, labels = collect_jog_frames(cfg, n_frames, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xAE]))
    vae = init_vae(frames_arr.shape[1], latent_dim=latent_dim, hidden=hidden, beta=beta, rng=rng)
    vae, history = pretrain(vae, frames_arr, epochs=epochs, lr=lr, rng=rng)
    save_vae(vae, out_path)

    classifier = None
    agreement = None
    if classifier_out is not None:
        latents = np.array([encode(vae, f).mean for f in frames_arr])
        n_train = int(0.8 * len(latents))
        classifier = classifier_fit(latents[:n_train], labels[:n_train])
        held_z, held_y = latents[n_train:], labels[n_train:]
        preds = np.array([classifier_predict(classifier, z) >= classifier.threshold for z in held_z])
        agreement = float((preds == held_y).mean())
        Path(classifier_out).write_text(json.dumps(classifier_to_dict(classifier)))
    return vae, classifier, agreement
