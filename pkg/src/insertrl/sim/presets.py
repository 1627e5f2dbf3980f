"""Named geometry/task presets and the JSON config schema for the simulator.

Config files are plain JSON with three documented key groups:

  geometry.*   peg_width, peg_length, socket_width, socket_depth,
               chamfer_width, surface_halfwidth                (meters)
  task.*       kind, max_steps, success_depth, success_align_tol,
               force_limit, modality, reset_height, penalty_stiffness,
               penetration_cap, workspace {xmin,xmax,ymin,ymax},
               motion {amplitude, max_speed}
  curriculum.* see insertrl.curriculum.SchedulePolicy.from_dict

A config may start from a named preset ("preset": "static_usb") and override
individual keys.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .types import Box, Geometry, Modality, SocketMotionParams, TaskConfig, TaskKind

# USB-like connector: 1 mm clearance, 1 mm chamfer lip
USB_GEOMETRY = Geometry(
    peg_width=0.010,
    peg_length=0.030,
    socket_width=0.011,
    socket_depth=0.012,
    chamfer_width=0.001,
    surface_halfwidth=0.150,
)

# metal key and lock: 0.4 mm clearance, no chamfer to funnel the key in
KEY_LOCK_GEOMETRY = Geometry(
    peg_width=0.010,
    peg_length=0.030,
    socket_width=0.0104,
    socket_depth=0.012,
    chamfer_width=0.0,
    surface_halfwidth=0.150,
)

GEOMETRY_PRESETS = {
    "usb": USB_GEOMETRY,
    "key_lock": KEY_LOCK_GEOMETRY,
}


def _task(geom: Geometry, **kw) -> TaskConfig:
    kw.setdefault("success_depth", 0.8 * geom.socket_depth)
    return TaskConfig(**kw)


STATIC_USB = _task(
    USB_GEOMETRY,
    kind=TaskKind.STATIC,
    max_steps=200,  # 10 s at 20 Hz
    modality=Modality.PROPRIO_FT,
    penetration_cap=0.5 * USB_GEOMETRY.clearance,
)

MOVING_SOCKET_USB = _task(
    USB_GEOMETRY,
    kind=TaskKind.MOVING_SOCKET,
    max_steps=200,
    modality=Modality.FT_VISION_NO_POSE,
    penetration_cap=0.5 * USB_GEOMETRY.clearance,
    motion=SocketMotionParams(amplitude=0.010, max_speed=0.0),
)

BLIND_SEARCH_KEY = _task(
    KEY_LOCK_GEOMETRY,
    kind=TaskKind.BLIND_SEARCH,
    max_steps=300,  # 15 s at 20 Hz
    modality=Modality.PROPRIO_FT,
    penetration_cap=0.5 * KEY_LOCK_GEOMETRY.clearance,
)

TASK_PRESETS: dict[str, tuple[TaskConfig, Geometry]] = {
    "static_usb": (STATIC_USB, USB_GEOMETRY),
    "moving_socket_usb": (MOVING_SOCKET_USB, USB_GEOMETRY),
    "blind_search_key": (BLIND_SEARCH_KEY, KEY_LOCK_GEOMETRY),
}


def geometry_from_dict(d: dict) -> Geometry:
    return Geometry(**d)


def geometry_to_dict(geom: Geometry) -> dict:
    return dataclasses.asdict(geom)


def task_from_dict(d: dict, geom: Geometry | None = None) -> TaskConfig:
    d = dict(d)
    if "kind" in d:
        d["kind"] = TaskKind(d["kind"])
    if "modality" in d:
        d["modality"] = Modality(d["modality"])
    if "workspace" in d:
        d["workspace"] = Box(**d["workspace"])
    if "motion" in d:
        d["motion"] = SocketMotionParams(**d["motion"])
    if "success_depth" not in d and geom is not None:
        d["success_depth"] = 0.8 * geom.socket_depth
    return TaskConfig(**d)


def task_to_dict(task: TaskConfig) -> dict:
    d = dataclasses.asdict(task)
    d["kind"] = task.kind.value
    d["modality"] = task.modality.value
    return d


def load_task_config(path: str | Path) -> tuple[TaskConfig, Geometry, dict]:
    """Load {preset?, geometry?, task?, curriculum?} from a JSON file.

    Returns (task, geometry, curriculum_dict); preset values are applied
    first, then per-key overrides.
    """
    with open(path) as f:
        cfg = json.load(f)
    return resolve_task_config(cfg)


def resolve_task_config(cfg: dict) -> tuple[TaskConfig, Geometry, dict]:
    preset = cfg.get("preset")
    if preset is not None:
        if preset not in TASK_PRESETS:
            raise KeyError(f"unknown preset {preset!r}; have {sorted(TASK_PRESETS)}")
        task, geom = TASK_PRESETS[preset]
    else:
        task, geom = STATIC_USB, USB_GEOMETRY
    if "geometry" in cfg:
        geom = geometry_from_dict({**geometry_to_dict(geom), **cfg["geometry"]})
    if "task" in cfg:
        merged = {**task_to_dict(task), **cfg["task"]}
        task = task_from_dict(merged, geom)
    return task, geom, cfg.get("curriculum", {})
