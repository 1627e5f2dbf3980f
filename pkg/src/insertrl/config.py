"""Run configuration: one JSON file describes a whole training/eval run.

Key groups (all optional, preset defaults fill the rest):

  preset        name from insertrl.sim.presets.TASK_PRESETS
  geometry.*    part dimensions (see sim.presets)
  task.*        episode/termination parameters (see sim.presets)
  curriculum.*  SchedulePolicy fields
  agent.*       AgentConfig fields
  run.*         everything below: seeds, budgets, demo source, output dir
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .agent import AgentConfig
from .curriculum import SchedulePolicy
from .sim import Geometry, TaskConfig, TaskKind
from .sim.presets import resolve_task_config

DEMO_SOURCES = ("scripted", "file", "teleop")


@dataclass(frozen=True)
class RunConfig:
    task: TaskConfig
    geometry: Geometry
    schedule: SchedulePolicy
    agent: AgentConfig = field(default_factory=AgentConfig)
    preset: str = "static_usb"

    seed: int = 0
    out_dir: str = "runs/latest"
    demo_source: str = "scripted"
    demo_file: str | None = None
    n_demos: int = 20
    demo_noise: float = 0.0
    demo_reach: float | None = None     # sweep-expert staging; default derived below
    max_env_steps: int = 200_000
    max_wall_seconds: float = 3600.0
    learner_steps_per_env_step: float = 1.0
    synchronous: bool = True
    checkpoint_every_episodes: int = 200
    log_every_episodes: int = 25

    vae_checkpoint: str | None = None
    classifier_checkpoint: str | None = None
    reward_from_classifier: bool = False

    def __post_init__(self):
        if self.demo_source not in DEMO_SOURCES:
            raise ValueError(f"demo_source must be one of {DEMO_SOURCES}")
        if self.demo_source == "file" and not self.demo_file:
            raise ValueError("demo_source 'file' requires demo_file")
        if self.max_env_steps <= 0 or self.max_wall_seconds <= 0:
            raise ValueError("budgets must be positive")
        if self.learner_steps_per_env_step < 0:
            raise ValueError("learner ratio must be >= 0")

    @property
    def effective_demo_reach(self) -> float:
        """How far left of nominal the sweep demonstrator stages: past any
        offset the task can hide, plus a margin."""
        if self.demo_reach is not None:
            return self.demo_reach
        max_lateral = max(self.schedule.pose_rand_max[0], self.schedule.offset_bound_max)
        return 1.5 * max_lateral + 0.002


def default_schedule_for(task: TaskConfig, geometry: Geometry) -> SchedulePolicy:
    if task.kind is TaskKind.MOVING_SOCKET:
        # socket-pose randomization is the paper's +-6 cm scaled to keep the
        # socket inside the wrist camera's view; the 2.5 cm/s speed cap is kept
        return SchedulePolicy(
            n_stages=8,
            rand_stages=4,
            pose_rand_max=(0.02, 0.005, 0.0),
            socket_speed_max=0.025,
            action_scale_start=(0.01, 0.01, 0.1),
            action_scale_max=(0.08, 0.08, 0.5),
            action_growth=2.0,
        )
    if task.kind is TaskKind.BLIND_SEARCH:
        return SchedulePolicy(
            n_stages=8,
            rand_stages=8,
            pose_rand_max=(0.0, 0.0, 0.0),
            offset_bound_max=5.0 * geometry.clearance,
            action_scale_start=(0.03, 0.03, 0.2),
            action_scale_max=(0.03, 0.03, 0.2),
            action_growth=2.0,
        )
    return SchedulePolicy(
        n_stages=4,
        rand_stages=4,
        pose_rand_max=(5.0 * geometry.clearance, 5.0 * geometry.clearance, 0.02),
        action_scale_start=(0.05, 0.05, 0.3),
        action_scale_max=(0.05, 0.05, 0.3),
        action_growth=2.0,
    )


def run_config_from_dict(cfg: dict) -> RunConfig:
    task, geometry, curriculum_d = resolve_task_config(cfg)
    schedule = default_schedule_for(task, geometry)
    if curriculum_d:
        merged = {**dataclasses.asdict(schedule), **curriculum_d}
        schedule = SchedulePolicy.from_dict(merged)
    agent_d = dict(cfg.get("agent", {}))
    if "hidden_sizes" in agent_d:
        agent_d["hidden_sizes"] = tuple(agent_d["hidden_sizes"])
    if agent_d.get("target_clip") is not None:
        agent_d["target_clip"] = tuple(agent_d["target_clip"])
    agent = AgentConfig(**agent_d)
    run = dict(cfg.get("run", {}))
    return RunConfig(
        task=task,
        geometry=geometry,
        schedule=schedule,
        agent=agent,
        preset=cfg.get("preset", "static_usb"),
        **run,
    )


def load_run_config(path: str | Path) -> RunConfig:
    with open(path) as f:
        return run_config_from_dict(json.load(f))
