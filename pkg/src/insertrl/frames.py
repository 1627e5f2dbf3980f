"""Planar rigid-body frames: relative coordinates and reset randomization.

Every observation the agent sees is expressed relative to the pose the
end-effector had when the episode started ("the reset frame"). Shifting the
whole scene and the reset frame together therefore leaves the observation
stream unchanged, which is what lets a trained policy run at new board
locations without retraining.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    t = math.fmod(theta, TWO_PI)
    if t > math.pi:
        t -= TWO_PI
    elif t <= -math.pi:
        t += TWO_PI
    return t


@dataclass(frozen=True)
class Pose:
    """Planar pose (x, y, theta). theta is always wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y}, {self.theta})")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


IDENTITY = Pose(0.0, 0.0, 0.0)


def compose(a: Pose, b: Pose) -> Pose:
    """Rigid-transform composition a ∘ b (apply b in a's frame)."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        a.theta + b.theta,
    )


def inverse(p: Pose) -> Pose:
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.theta)


def relative_pose(current: Pose, reset: Pose) -> Pose:
    """Pose of `current` expressed in the `reset` frame: reset^-1 ∘ current.

    Satisfies compose(reset, relative_pose(current, reset)) == current, so any
    world offset applied to both arguments cancels out.
    """
    return compose(inverse(reset), current)


def transform_point(p: Pose, x: float, y: float) -> tuple[float, float]:
    """Map a point from p's local frame into the parent frame."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    return (p.x + c * x - s * y, p.y + s * x + c * y)


def rotate_vec(theta: float, vx: float, vy: float) -> tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    return (c * vx - s * vy, s * vx + c * vy)


@dataclass(frozen=True)
class RandomizationParams:
    """Per-axis reset perturbation magnitudes around a nominal reset pose."""

    epsilon: tuple[float, float, float]  # (m, m, rad), each >= 0
    nominal_reset: Pose = IDENTITY

    def __post_init__(self):
        if any(e < 0 for e in self.epsilon):
            raise ValueError(f"negative perturbation magnitude {self.epsilon}")


def randomize_reset(params: RandomizationParams, rng: np.random.Generator) -> Pose:
    """Sample a perturbed reset pose: nominal + U[-eps, eps] per axis.

    Always draws three uniforms so the rng stream advances identically
    whether or not individual magnitudes are zero.
    """
    ex, ey, eth = params.epsilon
    sx = rng.uniform(-ex, ex)
    sy = rng.uniform(-ey, ey)
    sth = rng.uniform(-eth, eth)
    t0 = params.nominal_reset
    return Pose(t0.x + sx, t0.y + sy, wrap_angle(t0.theta + sth))
