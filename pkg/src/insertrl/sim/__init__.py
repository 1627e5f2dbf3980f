from .contact import contact_wrench, peg_corners, point_penetration, resolve_contacts
from .env import InsertionEnv, StepResult, WorldState, check_success, peg_tip, reset, socket_motion, step
from .render import render
from .types import (
    Box,
    Geometry,
    Modality,
    Observation,
    SocketMotionParams,
    TaskConfig,
    TaskKind,
    TerminationReason,
    Twist,
    Wrench,
    observation_dim,
)

__all__ = [
    "Box",
    "Geometry",
    "InsertionEnv",
    "Modality",
    "Observation",
    "SocketMotionParams",
    "StepResult",
    "TaskConfig",
    "TaskKind",
    "TerminationReason",
    "Twist",
    "WorldState",
    "Wrench",
    "check_success",
    "contact_wrench",
    "observation_dim",
    "peg_corners",
    "peg_tip",
    "point_penetration",
    "render",
    "reset",
    "resolve_contacts",
    "socket_motion",
    "step",
]
