"""Deterministic fixed-timestep planar insertion environment.

All dynamics run in the *scene frame* (socket nominally at the origin, y up).
A world anchor pose is carried along purely for presentation/logging: moving
or rotating the anchor relocates the whole scene without touching a single
bit of the dynamics or observations, which realizes zero-shot transfer of a
trained policy to new board placements exactly.

Actions are velocity commands expressed in the episode reset frame; the
observation stream is likewise anchored at the pose the TCP had right after
reset, so neither the reset randomization nor the blind-search offset is
directly observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .. import frames
from ..frames import Pose, transform_point
from .contact import contact_wrench, resolve_contacts
from .types import (
    Geometry,
    Modality,
    Observation,
    SocketMotionParams,
    TaskConfig,
    TaskKind,
    TerminationReason,
    Twist,
    Wrench,
    ZERO_WRENCH,
    modality_uses_vision,
)

FeatureFn = Callable[[np.ndarray], np.ndarray]

MAX_RESET_TRIES = 100


@dataclass(frozen=True)
class WorldState:
    """Full simulator truth for one episode step.

    Scene-frame fields are the dynamics; `anchor` maps scene to world.
    `obs_origin` is the reset pose all observations are expressed against.
    """

    peg: Pose                 # TCP pose, scene frame
    twist: Twist              # achieved velocity over the last step, reset frame
    socket: Pose              # current socket pose, scene frame
    socket_rest: Pose         # socket pose at zero motion phase
    obs_origin: Pose          # reset frame (scene coords)
    tick: int
    motion_phase: float       # radians, moving task only
    seed: int                 # episode seed (rng is only used inside reset)
    anchor: Pose = frames.IDENTITY

    @property
    def peg_pose(self) -> Pose:
        """TCP pose in world coordinates (presentation only)."""
        return frames.compose(self.anchor, self.peg)

    @property
    def socket_pose(self) -> Pose:
        return frames.compose(self.anchor, self.socket)


def peg_tip(peg: Pose, geom: Geometry) -> tuple[float, float]:
    return transform_point(peg, 0.0, -geom.peg_length)


def socket_motion(phase: float, t: float, params: SocketMotionParams) -> Pose:
    """Lateral socket displacement at time t: a randomized-phase sinusoid whose
    peak speed equals max_speed (paper's circular motion collapsed to the one
    lateral axis of the planar world)."""
    if params.max_speed <= 0.0 or params.amplitude <= 0.0:
        return Pose(0.0, 0.0, 0.0)
    omega = params.max_speed / params.amplitude
    return Pose(params.amplitude * math.sin(omega * t + phase), 0.0, 0.0)


def check_success(peg: Pose, socket: Pose, geom: Geometry, task: TaskConfig) -> bool:
    """True iff the peg tip is deep enough, centered, and aligned."""
    tx, ty = peg_tip(peg, geom)
    cs, ss = math.cos(socket.theta), math.sin(socket.theta)
    dx, dy = tx - socket.x, ty - socket.y
    lx = cs * dx + ss * dy
    ly = -ss * dx + cs * dy
    depth = -ly
    if depth < task.success_depth:
        return False
    if abs(frames.wrap_angle(peg.theta - socket.theta)) > task.success_align_tol:
        return False
    return abs(lx) <= geom.clearance / 2.0


@dataclass
class StepResult:
    state: WorldState
    obs: Observation
    reward: int
    done: bool
    reason: TerminationReason | None


def _make_observation(
    state: WorldState,
    wrench: Wrench,
    task: TaskConfig,
    geom: Geometry,
    feature_fn: FeatureFn | None,
) -> Observation:
    modality = task.modality
    rel = None
    if modality in (Modality.PROPRIO, Modality.PROPRIO_FT, Modality.PROPRIO_FT_VISION):
        rel = frames.relative_pose(state.peg, state.obs_origin)
    wr = None if modality is Modality.PROPRIO else wrench
    latent = None
    if modality_uses_vision(modality):
        from .render import render

        img = render(state, geom)
        if feature_fn is None:
            raise ValueError(f"modality {modality.value} requires a feature_fn")
        latent = np.asarray(feature_fn(img), dtype=float)
    return Observation(rel_pose=rel, twist=state.twist, wrench=wr, latent=latent)


def reset(
    task: TaskConfig,
    geom: Geometry,
    pose_rand: tuple[float, float, float],
    offset_bound_b: float,
    seed: int,
    anchor: Pose = frames.IDENTITY,
    feature_fn: FeatureFn | None = None,
    forced_blind_offset: float | None = None,
) -> tuple[WorldState, Observation]:
    """Start an episode.

    The nominal reset puts the peg tip `reset_height` above the nominal socket
    center, perturbed per `pose_rand`. Blind-search episodes additionally
    shift the peg laterally by U[-b, b] (or `forced_blind_offset`, used by the
    perturbation-sweep protocol); that shift is invisible to the agent because
    observations are anchored at the final perturbed pose.
    """
    rng = np.random.default_rng(seed)
    nominal = Pose(0.0, task.reset_height + geom.peg_length, 0.0)
    params = frames.RandomizationParams(pose_rand, nominal)
    start = None
    for _ in range(MAX_RESET_TRIES):
        candidate = frames.randomize_reset(params, rng)
        if task.workspace.contains(candidate.x, candidate.y):
            start = candidate
            break
    if start is None:
        raise RuntimeError(f"could not sample a reset pose inside the workspace after {MAX_RESET_TRIES} tries")

    blind_dx = None
    if forced_blind_offset is not None:
        blind_dx = forced_blind_offset  # evaluation protocols may force it on any task
    elif task.kind is TaskKind.BLIND_SEARCH:
        blind_dx = rng.uniform(-offset_bound_b, offset_bound_b)
    if blind_dx is not None:
        start = Pose(start.x + blind_dx, start.y, start.theta)

    motion_phase = 0.0
    if task.kind is TaskKind.MOVING_SOCKET:
        motion_phase = rng.uniform(0.0, 2.0 * math.pi)

    socket_rest = Pose(0.0, 0.0, 0.0)
    socket = socket_rest
    if task.kind is TaskKind.MOVING_SOCKET:
        socket = frames.compose(socket_rest, socket_motion(motion_phase, 0.0, task.motion))

    state = WorldState(
        peg=start,
        twist=Twist(),
        socket=socket,
        socket_rest=socket_rest,
        obs_origin=start,
        tick=0,
        motion_phase=motion_phase,
        seed=seed,
        anchor=anchor,
    )
    obs = _make_observation(state, ZERO_WRENCH, task, geom, feature_fn)
    return state, obs


def step(
    state: WorldState,
    action: np.ndarray,
    task: TaskConfig,
    geom: Geometry,
    bounds: np.ndarray,
    feature_fn: FeatureFn | None = None,
) -> StepResult:
    """Advance one control tick. Pure function of (state, action, config)."""
    action = np.asarray(action, dtype=float)
    if action.shape != (3,) or not np.all(np.isfinite(action)):
        raise ValueError(f"action must be 3 finite velocities, got {action!r}")
    cmd = np.clip(action, -bounds, bounds)

    t_next = (state.tick + 1) * task.dt
    socket = state.socket
    if task.kind is TaskKind.MOVING_SOCKET:
        socket = frames.compose(state.socket_rest, socket_motion(state.motion_phase, t_next, task.motion))

    # command is expressed in the reset frame; integrate in the scene frame
    vx, vy = frames.rotate_vec(state.obs_origin.theta, cmd[0], cmd[1])
    candidate = Pose(
        state.peg.x + vx * task.dt,
        state.peg.y + vy * task.dt,
        state.peg.theta + cmd[2] * task.dt,
    )
    resolved = resolve_contacts(candidate, socket, geom, task.penetration_cap)

    achieved = frames.rotate_vec(
        -state.obs_origin.theta,
        (resolved.x - state.peg.x) / task.dt,
        (resolved.y - state.peg.y) / task.dt,
    )
    twist = Twist(
        achieved[0],
        achieved[1],
        frames.wrap_angle(resolved.theta - state.peg.theta) / task.dt,
    )

    new_state = replace(state, peg=resolved, twist=twist, socket=socket, tick=state.tick + 1)
    wrench = contact_wrench(resolved, socket, geom, task.penalty_stiffness)

    reward = 0
    done = False
    reason: TerminationReason | None = None
    if check_success(resolved, socket, geom, task):
        reward, done, reason = 1, True, TerminationReason.SUCCESS
    elif not task.workspace.contains(resolved.x, resolved.y):
        done, reason = True, TerminationReason.WORKSPACE_EXIT
    elif wrench.force_magnitude > task.force_limit:
        done, reason = True, TerminationReason.FORCE_LIMIT
    elif new_state.tick >= task.max_steps:
        done, reason = True, TerminationReason.TIMEOUT

    obs = _make_observation(new_state, wrench, task, geom, feature_fn)
    return StepResult(new_state, obs, reward, done, reason)


class InsertionEnv:
    """Stateful convenience wrapper around the pure reset/step functions.

    One instance is single-threaded; run several instances for parallelism.
    """

    def __init__(
        self,
        task: TaskConfig,
        geom: Geometry,
        anchor: Pose = frames.IDENTITY,
        feature_fn: FeatureFn | None = None,
    ):
        self.task = task
        self.geom = geom
        self.anchor = anchor
        self.feature_fn = feature_fn
        self.state: WorldState | None = None

    def reset(
        self,
        seed: int,
        pose_rand: tuple[float, float, float] = (0.0, 0.0, 0.0),
        offset_bound_b: float = 0.0,
        forced_blind_offset: float | None = None,
    ) -> Observation:
        self.state, obs = reset(
            self.task,
            self.geom,
            pose_rand,
            offset_bound_b,
            seed,
            anchor=self.anchor,
            feature_fn=self.feature_fn,
            forced_blind_offset=forced_blind_offset,
        )
        return obs

    def step(self, action: np.ndarray, bounds: np.ndarray) -> StepResult:
        if self.state is None:
            raise RuntimeError("step before reset")
        result = step(self.state, action, self.task, self.geom, bounds, self.feature_fn)
        self.state = result.state
        return result

    def proprio_rel_pose(self) -> Pose:
        """TCP pose relative to the reset frame: robot-side proprioception.

        Always exists on the physical system; the modality mask governs only
        what the agent's observation carries. Demonstrators may read it.
        """
        if self.state is None:
            raise RuntimeError("no active episode")
        return frames.relative_pose(self.state.peg, self.state.obs_origin)

    # privileged accessors: only experts, baselines, and the datalog may use
    # these; nothing on the agent's observation path touches them.
    def privileged_socket_pose(self) -> Pose:
        if self.state is None:
            raise RuntimeError("no active episode")
        return self.state.socket

    def privileged_peg_pose(self) -> Pose:
        if self.state is None:
            raise RuntimeError("no active episode")
        return self.state.peg
