"""Core simulator types: sensor tuples, part geometry, task configuration."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..frames import Pose

CONTROL_RATE_HZ = 20.0
DT = 1.0 / CONTROL_RATE_HZ


@dataclass(frozen=True)
class Twist:
    """Planar velocity command / reading: (vx, vy, wtheta)."""

    vx: float = 0.0
    vy: float = 0.0
    wtheta: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.wtheta])

    @classmethod
    def from_array(cls, a) -> "Twist":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Wrench:
    """Planar contact reaction: forces (N) and torque about the TCP (N*m)."""

    fx: float = 0.0
    fy: float = 0.0
    tau: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fy, self.tau])

    @property
    def force_magnitude(self) -> float:
        return math.hypot(self.fx, self.fy)


ZERO_WRENCH = Wrench()


@dataclass(frozen=True)
class Geometry:
    """Peg/socket dimensions in meters.

    The board surface is the half-plane y <= 0 (minus the socket cavity) in
    the socket frame; the peg is a rectangle hanging below the TCP.
    """

    peg_width: float = 0.010
    peg_length: float = 0.030
    socket_width: float = 0.011
    socket_depth: float = 0.012
    chamfer_width: float = 0.001
    surface_halfwidth: float = 0.150

    def __post_init__(self):
        if self.socket_width <= self.peg_width:
            raise ValueError("socket must be wider than the peg")
        for name in ("peg_width", "peg_length", "socket_width", "socket_depth", "surface_halfwidth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.chamfer_width < 0:
            raise ValueError("chamfer_width must be >= 0")

    @property
    def clearance(self) -> float:
        return self.socket_width - self.peg_width


class TaskKind(str, enum.Enum):
    STATIC = "static"
    MOVING_SOCKET = "moving_socket"
    BLIND_SEARCH = "blind_search"


class Modality(str, enum.Enum):
    """Which observation channels the policy receives."""

    PROPRIO = "proprio"                      # relative pose + velocity
    PROPRIO_FT = "proprio_ft"                # + wrist force/torque
    PROPRIO_FT_VISION = "proprio_ft_vision"  # + visual latent
    FT_VISION_NO_POSE = "ft_vision_no_pose"  # velocity + F/T + latent, pose hidden


@dataclass(frozen=True)
class Box:
    """Axis-aligned workspace bounds on the TCP, in the scene frame."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax


@dataclass(frozen=True)
class SocketMotionParams:
    """Lateral sinusoid for the moving-socket task (zero speed = stationary)."""

    amplitude: float = 0.010
    max_speed: float = 0.0


@dataclass(frozen=True)
class TaskConfig:
    kind: TaskKind = TaskKind.STATIC
    dt: float = DT
    max_steps: int = 200
    success_depth: float = 0.8 * 0.012
    success_align_tol: float = 0.1
    force_limit: float = 30.0
    workspace: Box = field(default_factory=lambda: Box(-0.10, 0.10, 0.004, 0.12))
    modality: Modality = Modality.PROPRIO_FT
    reset_height: float = 0.05
    penalty_stiffness: float = 1e4
    # residual penetration allowed after contact resolution; forces read
    # k_pen * penetration, so this sets the saturated press force
    penetration_cap: float = 0.0005
    motion: SocketMotionParams = field(default_factory=SocketMotionParams)

    def __post_init__(self):
        if abs(self.dt * CONTROL_RATE_HZ - 1.0) > 1e-12:
            raise ValueError(f"dt must equal 1/{CONTROL_RATE_HZ} Hz")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")

    @property
    def episode_seconds(self) -> float:
        return self.max_steps * self.dt


class TerminationReason(str, enum.Enum):
    SUCCESS = "success"
    TIMEOUT = "timeout"
    WORKSPACE_EXIT = "workspace_exit"
    FORCE_LIMIT = "force_limit"


@dataclass(frozen=True)
class Observation:
    """What the agent senses. Field presence follows the task modality:

    - rel_pose: pose relative to the episode reset frame (None when hidden)
    - twist: achieved velocity in the reset frame (always present)
    - wrench: wrist force/torque (None for pure proprio)
    - latent: visual feature vector (vision modalities only)
    """

    rel_pose: Pose | None
    twist: Twist
    wrench: Wrench | None
    latent: np.ndarray | None = None

    def vector(self) -> np.ndarray:
        parts = []
        if self.rel_pose is not None:
            parts.append(np.array(self.rel_pose.as_tuple()))
        parts.append(self.twist.as_array())
        if self.wrench is not None:
            parts.append(self.wrench.as_array())
        if self.latent is not None:
            parts.append(np.asarray(self.latent, dtype=float))
        return np.concatenate(parts)


def observation_dim(modality: Modality, latent_dim: int = 0) -> int:
    dims = {
        Modality.PROPRIO: 6,
        Modality.PROPRIO_FT: 9,
        Modality.PROPRIO_FT_VISION: 9 + latent_dim,
        Modality.FT_VISION_NO_POSE: 6 + latent_dim,
    }
    return dims[modality]


# fixed per-channel scales that bring observation components to O(1) for the
# networks: pose in ~5 cm, velocity in ~5 cm/s / 0.3 rad/s, force in ~10 N
_POSE_SCALE = (0.05, 0.05, 0.5)
_TWIST_SCALE = (0.05, 0.05, 0.3)
_WRENCH_SCALE = (10.0, 10.0, 0.1)


def observation_scales(modality: Modality, latent_dim: int = 0) -> np.ndarray:
    parts: list[float] = []
    if modality in (Modality.PROPRIO, Modality.PROPRIO_FT, Modality.PROPRIO_FT_VISION):
        parts += _POSE_SCALE
    parts += _TWIST_SCALE
    if modality is not Modality.PROPRIO:
        parts += _WRENCH_SCALE
    parts += [1.0] * latent_dim
    return np.array(parts)


def modality_uses_vision(modality: Modality) -> bool:
    return modality in (Modality.PROPRIO_FT_VISION, Modality.FT_VISION_NO_POSE)
