"""Scripted comparison policies and the outward-grid perturbation protocol.

Three controllers live here:

  - SpiralSearchPolicy: the integrator-style baseline. Descend until contact,
    regulate the press force, and trace an expanding search pattern until the
    peg drops into the hole (the planar shadow of a force-regulated
    Archimedean spiral).
  - PrivilegedExpert: a quasi-expert demonstrator that reads the true socket
    pose (which the agent never sees) and beelines above it, descends, and
    micro-corrects on contact. The demo source for tasks where the target is
    effectively observable (static near-nominal, moving-socket with vision).
  - SweepExpert: an unprivileged searcher that stages to one side of every
    possible socket position and sweeps across while pressing down. This is
    the demonstration strategy for hidden-offset conditions: its action
    stream depends only on quantities the agent itself observes, so the
    learned policy can actually reproduce it.

Experts are the only components allowed to touch privileged state, and only
through the InsertionEnv.privileged_* accessors; nothing on the agent's
observation path can reach the true socket pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import frames
from .sim import InsertionEnv, Observation, TaskKind, TerminationReason


@dataclass(frozen=True)
class SpiralParams:
    approach_force: float = 1.0    # N, contact detection threshold
    pitch: float = 0.0002          # m per revolution of search growth
    angular_rate: float = 3.0      # rad/s of spiral phase advance
    force_setpoint: float = 2.0    # N, regulated press force
    detect_drop: float = 0.001     # m of drop below contact height = "in the hole"
    descend_speed: float = 0.02    # m/s approach speed
    force_gain: float = 0.002      # m/s per N of force error

    def __post_init__(self):
        if self.pitch <= 0 or self.detect_drop <= 0:
            raise ValueError("pitch and detect_drop must be positive")


class SpiralSearchPolicy:
    """Force-regulated spiral search over the relative-pose observation.

    Phase 1: descend until the press force reaches approach_force.
    Phase 2: hold the press force while the lateral position tracks
    x(phi) = (pitch*phi/2pi) * cos(phi), the 1D projection of the Archimedean
    spiral r = pitch*phi/(2pi). Once the tip falls detect_drop below the
    contact height, drive straight down to finish the insertion.
    """

    def __init__(self, params: SpiralParams, dt: float):
        self.params = params
        self.dt = dt
        self.phase = 0.0
        self.contact_y: float | None = None
        self.anchor_x = 0.0
        self.inserting = False

    def reset(self) -> None:
        self.phase = 0.0
        self.contact_y = None
        self.anchor_x = 0.0
        self.inserting = False

    def spiral_lateral(self, phi: float) -> float:
        return (self.params.pitch * phi / (2.0 * math.pi)) * math.cos(phi)

    def __call__(self, obs: Observation) -> np.ndarray:
        p = self.params
        rel = obs.rel_pose
        fy = obs.wrench.fy if obs.wrench is not None else 0.0
        if self.contact_y is None:
            if abs(fy) >= p.approach_force:
                self.contact_y = rel.y
                self.anchor_x = rel.x
            return np.array([0.0, -p.descend_speed, 0.0])

        if self.inserting or rel.y < self.contact_y - p.detect_drop:
            self.inserting = True
            return np.array([0.0, -p.descend_speed, 0.0])

        self.phase += p.angular_rate * self.dt
        target_x = self.anchor_x + self.spiral_lateral(self.phase)
        vx = (target_x - rel.x) / self.dt
        # proportional press-force regulation along the board normal
        vy = -p.force_gain * max(0.0, p.force_setpoint - abs(fy))
        return np.array([vx, vy, 0.0])


@dataclass
class PrivilegedExpert:
    """Teleoperator stand-in with access to the true socket pose.

    Travels above the socket, descends into it, and nudges laterally when
    pressing without progress. `noise_scale` adds action jitter so demo sets
    vary; noisy failures get filtered out by the demo collector.
    """

    env: InsertionEnv
    travel_speed: float = 0.05
    descend_speed: float = 0.03
    hover: float = 0.008           # approach altitude above the socket mouth
    noise_scale: float = 0.0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def __call__(self, obs: Observation) -> np.ndarray:
        task, geom = self.env.task, self.env.geom
        peg = self.env.privileged_peg_pose()
        socket = self.env.privileged_socket_pose()
        tipx, tipy = frames.transform_point(peg, 0.0, -geom.peg_length)
        dx = socket.x - tipx
        dtheta = frames.wrap_angle(socket.theta - peg.theta)
        fy = obs.wrench.fy if obs.wrench is not None else 0.0

        if tipy > socket.y + self.hover and abs(dx) > 0.0008:
            # cruise toward a hover point above the socket
            vx = np.clip(dx / task.dt, -self.travel_speed, self.travel_speed)
            vy = np.clip((socket.y + self.hover - tipy) / task.dt, -self.travel_speed, 0.0)
        elif fy > 1.0 and abs(dx) > geom.clearance / 2:
            # pressing but off-center: micro-correct toward the opening
            vx = np.clip(dx / task.dt, -0.006, 0.006)
            vy = -0.004
        else:
            # descend while tracking the (possibly moving) socket laterally
            vx = np.clip(dx / task.dt, -self.travel_speed, self.travel_speed)
            vy = -self.descend_speed
        wt = np.clip(dtheta / task.dt, -0.2, 0.2)
        a = np.array([vx, vy, wt])
        if self.noise_scale > 0:
            a = a + self.rng.normal(0.0, self.noise_scale, 3)
        # the plan is scene-frame; the env expects reset-frame commands
        origin_th = self.env.state.obs_origin.theta
        rx, ry = frames.rotate_vec(-origin_th, a[0], a[1])
        return np.array([rx, ry, a[2]])


@dataclass
class SweepExpert:
    """Unprivileged search demonstrator for hidden-offset starts.

    Plan, phrased entirely in the observations the agent also sees:
      1. glide to a staging column `reach` left of nominal (past any possible
         socket position) at a safe altitude;
      2. descend until the press force appears;
      3. sweep right while pressing: crossing the mouth drops the tip in;
      4. wall contact (|fx|) while descending: give way along the push.
    """

    env: InsertionEnv
    reach: float                   # staging distance left of nominal, > max offset
    travel_speed: float = 0.03
    sweep_speed: float = 0.005
    press_speed: float = 0.008
    contact_force: float = 0.25    # N, "we are pressing" threshold
    noise_scale: float = 0.0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def plan(self, obs: Observation) -> np.ndarray:
        task = self.env.task
        # a demonstrator always has proprioception, whatever the agent's mask hides
        rel = obs.rel_pose if obs.rel_pose is not None else self.env.proprio_rel_pose()
        fx = obs.wrench.fx if obs.wrench is not None else 0.0
        fy = obs.wrench.fy if obs.wrench is not None else 0.0
        stage_x = -self.reach
        # reset puts the tip reset_height above the surface; stage ~12 mm lower,
        # still safely above it under any reset jitter
        safe_alt = -(task.reset_height - 0.012)
        # hold the reset orientation: a pure-feedback term the policy can copy
        wt = float(np.clip(-2.0 * rel.theta, -0.15, 0.15))

        if abs(fx) > self.contact_force:
            # wall or chamfer contact: move with the push, keep descending
            return np.array([math.copysign(0.002, fx), -self.press_speed, wt])
        if fy > self.contact_force:
            # pressed flat on the surface: sweep toward +x
            return np.array([self.sweep_speed, -self.press_speed, wt])
        if rel.x > stage_x + 0.0005 and rel.y > safe_alt:
            # high up: glide left and down to the staging column
            vx = np.clip((stage_x - rel.x) / task.dt, -self.travel_speed, 0.0)
            vy = np.clip((safe_alt - rel.y) / task.dt, -self.travel_speed, 0.0)
            return np.array([vx, vy, wt])
        # at the staging column, over the mouth, or inside it: straight down
        return np.array([0.0, -0.02, wt])

    def __call__(self, obs: Observation) -> np.ndarray:
        a = self.plan(obs)
        if self.noise_scale > 0:
            a = a + self.rng.normal(0.0, self.noise_scale, 3)
        return a


def make_demo_expert(env: InsertionEnv, offset_reach: float, noise_scale: float = 0.0, seed: int = 0):
    """Demonstration strategy appropriate to the task's observability.

    When the policy sees the scene (vision modalities) or the target itself
    moves, demos show direct visual-servo approaches. When the target offset
    is hidden behind a relative frame, demos must show a search the agent can
    actually reproduce from its own observations.
    """
    from .sim.types import modality_uses_vision

    rng = np.random.default_rng(seed)
    hidden_target = env.task.kind in (TaskKind.STATIC, TaskKind.BLIND_SEARCH)
    if hidden_target and not modality_uses_vision(env.task.modality):
        return SweepExpert(env, reach=offset_reach, noise_scale=noise_scale, rng=rng)
    return PrivilegedExpert(env, noise_scale=noise_scale, rng=rng)


# --- outward perturbation sweep ----------------------------------------------


@dataclass
class SweepPoint:
    offset: float
    attempts: int
    successes: int

    @property
    def fully_successful(self) -> bool:
        return self.successes == self.attempts

    @property
    def fully_failed(self) -> bool:
        return self.successes == 0


@dataclass
class SweepReport:
    grid_step: float
    attempts_per_point: int
    points: list[SweepPoint]
    max_radius: float

    def to_dict(self) -> dict:
        return {
            "grid_step": self.grid_step,
            "attempts_per_point": self.attempts_per_point,
            "points": [
                {"offset": p.offset, "attempts": p.attempts, "successes": p.successes}
                for p in self.points
            ],
            "max_radius": self.max_radius,
        }

    def table(self) -> str:
        lines = ["offset_mm  successes/attempts", "-" * 30]
        for p in self.points:
            lines.append(f"{p.offset * 1e3:+8.2f}   {p.successes}/{p.attempts}")
        lines.append("-" * 30)
        lines.append(f"max tolerated radius: {self.max_radius * 1e3:.2f} mm")
        return "\n".join(lines)


def perturbation_sweep(
    policy_factory,
    env_factory,
    grid_step: float,
    attempts: int = 10,
    stop_after_consecutive_failures: int = 2,
    theta_jitter: float = 0.02,
    bounds: np.ndarray | None = None,
    base_seed: int = 0,
    max_rings: int = 200,
) -> SweepReport:
    """Outward grid protocol measuring the largest tolerated start offset.

    Rings of radius k*grid_step are visited in non-decreasing order (two
    points per ring in the planar world: +r and -r; ring 0 is the nominal
    point). Each point runs `attempts` episodes with a small start-rotation
    jitter. The sweep stops once `stop_after_consecutive_failures` grid
    points in a row produce zero successes; max_radius is the largest radius
    that had a fully successful point.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    if bounds is None:
        bounds = np.array([0.05, 0.05, 0.3])
    points: list[SweepPoint] = []
    max_radius = -1.0
    consecutive_failed = 0
    seed = base_seed

    def run_point(offset: float) -> SweepPoint:
        nonlocal seed
        successes = 0
        for _ in range(attempts):
            env = env_factory()
            policy = policy_factory(env)
            obs = env.reset(
                seed=seed,
                pose_rand=(0.0, 0.0, theta_jitter),
                forced_blind_offset=offset,
            )
            seed += 1
            res = None
            for _ in range(env.task.max_steps):
                res = env.step(policy(obs), bounds)
                obs = res.obs
                if res.done:
                    break
            if res is not None and res.reason is TerminationReason.SUCCESS:
                successes += 1
        return SweepPoint(offset, attempts, successes)

    for k in range(max_rings):
        ring = [0.0] if k == 0 else [k * grid_step, -k * grid_step]
        any_full = False
        for offset in ring:
            pt = run_point(offset)
            points.append(pt)
            consecutive_failed = consecutive_failed + 1 if pt.fully_failed else 0
            if pt.fully_successful:
                any_full = True
            if consecutive_failed >= stop_after_consecutive_failures:
                break
        if any_full:
            max_radius = k * grid_step
        if consecutive_failed >= stop_after_consecutive_failures:
            break
    return SweepReport(grid_step, attempts, points, max_radius if max_radius >= 0 else 0.0)
