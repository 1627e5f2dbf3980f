"""Penalty contact between the peg rectangle and the socket board.

The board is the solid half-plane y <= 0 (socket frame, |x| <= surface
halfwidth) minus the socket slot and its chamfer wedges. Contact is evaluated
at the four peg corners: each corner inside the solid yields a penalty force
k_pen * depth along the cheapest exit normal, where depth is the minimal
push-out distance. Torque is summed about the TCP.

Position resolution ("velocity projection") translates the peg so no corner
penetrates deeper than a small cap; the residual penetration is what the
force/torque sensor reads. There is no friction and no rotational contact
response -- commanded rotation always integrates, but the resulting corner
penetrations still push back and show up in the wrench.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..frames import Pose, transform_point
from .types import Geometry, Wrench


@dataclass(frozen=True)
class ContactPoint:
    depth: float      # minimal push-out distance, > 0 when penetrating
    normal: tuple[float, float]  # unit exit direction, socket frame
    corner: tuple[float, float]  # corner location, socket frame


def point_penetration(x: float, y: float, geom: Geometry) -> ContactPoint | None:
    """Penetration of a single point into the board solid (socket frame).

    Returns None when the point is in free space.
    """
    if y > 0.0:
        return None
    u = abs(x)
    sgn = 1.0 if x >= 0.0 else -1.0
    w2 = geom.socket_width / 2.0
    c = geom.chamfer_width
    d = geom.socket_depth

    # inside the slot cavity
    if u < w2 and y > -d:
        return None
    # inside a chamfer wedge (cavity): face runs from (w2 + c, 0) to (w2, -c)
    g = (u - w2) - y - c  # signed: < 0 on the cavity side of the face plane
    if c > 0.0 and u >= w2 and g < 0.0:
        return None
    # off the board edge
    if u > geom.surface_halfwidth:
        return None

    candidates: list[tuple[float, tuple[float, float]]] = []
    # straight up through the top surface (always a valid exit)
    candidates.append((-y, (0.0, 1.0)))
    # sideways into the slot cavity
    if y >= -d and u >= w2:
        candidates.append((u - w2, (-sgn, 0.0)))
    # up through the slot floor
    if u <= w2 and y <= -d:
        candidates.append((-d - y, (0.0, 1.0)))
    # diagonal exit toward the slot's inner floor corner
    if u > w2 and y < -d:
        du, dy2 = w2 - u, -d - y
        dist = math.hypot(du, dy2)
        if dist > 0.0:
            candidates.append((dist, (sgn * du / dist, dy2 / dist)))
    # perpendicular to the chamfer face, if the foot lands on the face segment
    if c > 0.0 and g >= 0.0:
        depth = g / math.sqrt(2.0)
        foot_u = u - depth / math.sqrt(2.0)
        if w2 <= foot_u <= w2 + c:
            inv = 1.0 / math.sqrt(2.0)
            candidates.append((depth, (-sgn * inv, inv)))
    # sideways off the board edge
    candidates.append((geom.surface_halfwidth - u, (sgn, 0.0)))

    depth, normal = min(candidates, key=lambda t: t[0])
    if depth <= 0.0:
        return None
    return ContactPoint(depth, normal, (x, y))


def peg_corners(peg_pose: Pose, geom: Geometry) -> list[tuple[float, float]]:
    """Corner positions in the parent frame; TCP is the top-center of the peg."""
    hw = geom.peg_width / 2.0
    length = geom.peg_length
    return [
        transform_point(peg_pose, -hw, 0.0),
        transform_point(peg_pose, hw, 0.0),
        transform_point(peg_pose, -hw, -length),
        transform_point(peg_pose, hw, -length),
    ]


def _corner_contacts(peg_pose: Pose, socket_pose: Pose, geom: Geometry) -> list[ContactPoint]:
    cs, ss = math.cos(socket_pose.theta), math.sin(socket_pose.theta)
    contacts = []
    for cx, cy in peg_corners(peg_pose, geom):
        # into the socket frame
        dx, dy = cx - socket_pose.x, cy - socket_pose.y
        lx = cs * dx + ss * dy
        ly = -ss * dx + cs * dy
        hit = point_penetration(lx, ly, geom)
        if hit is not None:
            contacts.append(hit)
    return contacts


def contact_wrench(
    peg_pose: Pose,
    socket_pose: Pose,
    geom: Geometry,
    penalty_stiffness: float,
) -> Wrench:
    """Total penalty force on the peg and torque about the TCP (socket-frame axes
    rotated back into the parent frame)."""
    cs, ss = math.cos(socket_pose.theta), math.sin(socket_pose.theta)
    fx = fy = tau = 0.0
    for hit in _corner_contacts(peg_pose, socket_pose, geom):
        fmag = penalty_stiffness * hit.depth
        # force in socket frame, then rotate into the parent frame
        fxs, fys = fmag * hit.normal[0], fmag * hit.normal[1]
        fxp = cs * fxs - ss * fys
        fyp = ss * fxs + cs * fys
        # corner back into the parent frame for the torque arm
        cxp = socket_pose.x + cs * hit.corner[0] - ss * hit.corner[1]
        cyp = socket_pose.y + ss * hit.corner[0] + cs * hit.corner[1]
        rx, ry = cxp - peg_pose.x, cyp - peg_pose.y
        fx += fxp
        fy += fyp
        tau += rx * fyp - ry * fxp
    return Wrench(fx, fy, tau)


def resolve_contacts(
    peg_pose: Pose,
    socket_pose: Pose,
    geom: Geometry,
    penetration_cap: float,
    max_iters: int = 8,
) -> Pose:
    """Translate the peg until no corner penetrates deeper than the cap.

    Projects along the deepest corner's exit normal, iterating because a
    projection can push another corner into a different face (e.g. the two
    chamfer faces funnel a descending peg toward the slot center).
    """
    pose = peg_pose
    cs, ss = math.cos(socket_pose.theta), math.sin(socket_pose.theta)
    for _ in range(max_iters):
        contacts = _corner_contacts(pose, socket_pose, geom)
        if not contacts:
            break
        worst = max(contacts, key=lambda h: h.depth)
        excess = worst.depth - penetration_cap
        if excess <= 1e-12:
            break
        nxs, nys = worst.normal
        nx = cs * nxs - ss * nys
        ny = ss * nxs + cs * nys
        pose = Pose(pose.x + excess * nx, pose.y + excess * ny, pose.theta)
    return pose
