"""Staged difficulty schedules.

Three knobs grow as measured competence rises, never regressing:
  - reset-pose randomization, ramped linearly to its cap first;
  - socket movement speed, ramped linearly to its cap after randomization;
  - the blind-search start-offset bound b, ramped linearly over all stages.
Action authority grows exponentially with stage up to a maximum.

A stage advances only when the success rate over a full recent-episode
window clears the threshold; the window refills from scratch after each
advance so every stage earns its own evidence.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class SchedulePolicy:
    n_stages: int = 8
    window: int = 50
    threshold: float = 0.8
    pose_rand_max: tuple[float, float, float] = (0.005, 0.005, 0.02)
    rand_stages: int = 4          # stages spent ramping randomization before speed
    socket_speed_max: float = 0.0
    action_scale_start: tuple[float, float, float] = (0.05, 0.05, 0.3)
    action_scale_max: tuple[float, float, float] = (0.05, 0.05, 0.3)
    action_growth: float = 2.0
    offset_bound_max: float = 0.0

    def __post_init__(self):
        if self.n_stages < 1 or self.window < 1:
            raise ValueError("n_stages and window must be >= 1")
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must be in (0, 1]")
        if self.action_growth <= 1.0:
            raise ValueError("action growth factor must exceed 1")
        if any(s > m for s, m in zip(self.action_scale_start, self.action_scale_max)):
            raise ValueError("action_scale_start must not exceed action_scale_max")

    @classmethod
    def from_dict(cls, d: dict) -> "SchedulePolicy":
        d = dict(d)
        for key in ("pose_rand_max", "action_scale_start", "action_scale_max"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def action_scale(
    stage_k: int,
    s0: tuple[float, ...],
    growth: float,
    smax: tuple[float, ...],
) -> tuple[float, ...]:
    """Exponential action-authority schedule: min(smax, s0 * growth^k)."""
    if growth <= 1.0:
        raise ValueError("growth must exceed 1")
    return tuple(min(m, s * growth**stage_k) for s, m in zip(s0, smax))


def sample_start_offset(b: float, rng: np.random.Generator) -> tuple[float, float]:
    """Two independent U[-b, b] lateral offset components.

    The planar simulator has a single lateral axis and consumes only the
    first component; the second exists for protocol parity with sweep grids.
    """
    if b < 0:
        raise ValueError("offset bound must be >= 0")
    return (rng.uniform(-b, b), rng.uniform(-b, b))


@dataclass
class CurriculumState:
    policy: SchedulePolicy
    stage: int = 0
    success_window: deque = field(default_factory=deque)

    def __post_init__(self):
        self.success_window = deque(self.success_window, maxlen=self.policy.window)

    # --- stage-derived knobs (monotone in stage by construction) -----------

    @property
    def pose_rand(self) -> tuple[float, float, float]:
        frac = min(1.0, self.stage / max(1, self.policy.rand_stages))
        return tuple(frac * m for m in self.policy.pose_rand_max)

    @property
    def socket_speed(self) -> float:
        speed_stages = self.policy.n_stages - self.policy.rand_stages
        if speed_stages <= 0:
            return self.policy.socket_speed_max if self.stage >= self.policy.n_stages else 0.0
        frac = (self.stage - self.policy.rand_stages) / speed_stages
        return self.policy.socket_speed_max * min(1.0, max(0.0, frac))

    @property
    def action_bounds(self) -> np.ndarray:
        return np.array(
            action_scale(
                self.stage,
                self.policy.action_scale_start,
                self.policy.action_growth,
                self.policy.action_scale_max,
            )
        )

    @property
    def offset_bound_b(self) -> float:
        return self.policy.offset_bound_max * min(1.0, self.stage / self.policy.n_stages)

    @property
    def at_max(self) -> bool:
        return self.stage >= self.policy.n_stages

    def record_episode(self, success: bool) -> None:
        self.success_window.append(1 if success else 0)

    @property
    def windowed_success_rate(self) -> float | None:
        if len(self.success_window) < self.policy.window:
            return None
        return sum(self.success_window) / len(self.success_window)

    def snapshot(self) -> dict:
        return {
            "stage": self.stage,
            "pose_rand": list(self.pose_rand),
            "socket_speed": self.socket_speed,
            "action_scale": self.action_bounds.tolist(),
            "offset_bound_b": self.offset_bound_b,
        }


def advance_task(state: CurriculumState, recent_success_rate: float | None = None) -> CurriculumState:
    """Advance one stage if the gating condition holds; otherwise unchanged.

    Gating: the success window is full and its rate clears the threshold.
    Randomization reaches its cap before socket speed starts to grow because
    both are driven by the same stage counter through the ramp split above.
    """
    if state.at_max:
        return state
    rate = recent_success_rate
    if rate is None:
        rate = state.windowed_success_rate
    if rate is None or rate < state.policy.threshold:
        return state
    return CurriculumState(policy=state.policy, stage=state.stage + 1, success_window=deque())


def max_curriculum(policy: SchedulePolicy) -> CurriculumState:
    """The terminal stage (used for evaluation at full difficulty)."""
    return CurriculumState(policy=policy, stage=policy.n_stages)
