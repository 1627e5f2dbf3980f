import math

import numpy as np
import pytest

from insertrl.frames import Pose
from insertrl.sim import Geometry, contact_wrench, peg_corners, point_penetration, resolve_contacts

GEOM = Geometry()  # USB-like: peg 10 mm, socket 11 mm, chamfer 1 mm, depth 12 mm
K = 1e4
SOCKET = Pose(0, 0, 0)


def hover(height: float, x: float = 0.0, theta: float = 0.0) -> Pose:
    """TCP pose putting the peg tip at the given height above the surface."""
    return Pose(x, height + GEOM.peg_length, theta)


class TestPointPenetration:
    def test_free_space_above(self):
        assert point_penetration(0.05, 0.001, GEOM) is None

    def test_inside_slot_cavity(self):
        assert point_penetration(0.0, -0.005, GEOM) is None
        assert point_penetration(0.0054, -0.005, GEOM) is None

    def test_flat_surface_pushout(self):
        hit = point_penetration(0.05, -0.0004, GEOM)
        assert hit is not None
        assert hit.depth == pytest.approx(0.0004)
        assert hit.normal == (0.0, 1.0)

    def test_slot_wall_pushout(self):
        hit = point_penetration(0.0057, -0.006, GEOM)
        assert hit is not None
        assert hit.depth == pytest.approx(0.0057 - GEOM.socket_width / 2)
        assert hit.normal == (-1.0, 0.0)

    def test_slot_wall_mirrored(self):
        hit = point_penetration(-0.0057, -0.006, GEOM)
        assert hit.normal == (1.0, 0.0)

    def test_slot_floor(self):
        hit = point_penetration(0.001, -0.0125, GEOM)
        assert hit.depth == pytest.approx(0.0005)
        assert hit.normal == (0.0, 1.0)

    def test_chamfer_face_analytic(self):
        # a point exactly `pen` past the middle of the right chamfer face
        w2, c = GEOM.socket_width / 2, GEOM.chamfer_width
        pen = 0.0003
        inv = 1 / math.sqrt(2)
        foot = (w2 + c / 2, -c / 2)
        p = (foot[0] + pen * inv, foot[1] - pen * inv)
        hit = point_penetration(p[0], p[1], GEOM)
        assert hit is not None
        assert hit.depth == pytest.approx(pen, rel=1e-12)
        assert hit.normal[0] == pytest.approx(-inv)
        assert hit.normal[1] == pytest.approx(inv)

    def test_chamfer_wedge_is_free(self):
        w2, c = GEOM.socket_width / 2, GEOM.chamfer_width
        assert point_penetration(w2 + 0.2 * c, -0.1 * c, GEOM) is None

    def test_off_board_edge_is_free(self):
        assert point_penetration(GEOM.surface_halfwidth + 0.01, -0.005, GEOM) is None


class TestContactWrench:
    def test_separated_zero(self):
        w = contact_wrench(hover(0.001), SOCKET, GEOM, K)
        assert (w.fx, w.fy, w.tau) == (0.0, 0.0, 0.0)

    def test_centered_in_mouth_zero(self):
        w = contact_wrench(hover(-0.002), SOCKET, GEOM, K)
        assert (w.fx, w.fy, w.tau) == (0.0, 0.0, 0.0)

    def test_flat_press_analytic(self):
        # both bottom corners pressed `pen` into the flat surface far from the slot
        pen = 0.0004
        pose = hover(-pen, x=0.05)
        w = contact_wrench(pose, SOCKET, GEOM, K)
        assert w.fx == 0.0
        assert w.fy == pytest.approx(2 * K * pen)  # two corners, each k*pen upward
        assert w.tau == pytest.approx(0.0, abs=1e-12)

    def test_single_chamfer_corner_analytic(self):
        # corner overlapping one chamfer face by 0.5 mm -> force along the
        # face normal with magnitude k*0.0005
        w2, c = GEOM.socket_width / 2, GEOM.chamfer_width
        pen = 0.0005
        inv = 1 / math.sqrt(2)
        foot = (w2 + c / 2, -c / 2)
        corner_target = (foot[0] + pen * inv, foot[1] - pen * inv)
        # place the peg so its bottom-right corner lands there and no other
        # corner touches anything: shift left so the bottom-left corner is
        # over the slot mouth
        pose = Pose(corner_target[0] - GEOM.peg_width / 2, corner_target[1] + GEOM.peg_length, 0.0)
        corners = peg_corners(pose, GEOM)
        assert corners[3] == pytest.approx(corner_target)
        w = contact_wrench(pose, SOCKET, GEOM, K)
        fmag = math.hypot(w.fx, w.fy)
        assert fmag == pytest.approx(K * pen, rel=1e-9)
        assert w.fx == pytest.approx(-K * pen * inv)
        assert w.fy == pytest.approx(K * pen * inv)

    def test_force_opposes_penetration(self):
        # along every contact the force points out of the obstacle: moving the
        # peg by +delta along the reported force must not increase penetration
        rng = np.random.default_rng(0)
        for _ in range(200):
            pose = Pose(rng.uniform(-0.02, 0.02), rng.uniform(0.0285, 0.032), rng.uniform(-0.1, 0.1))
            w = contact_wrench(pose, SOCKET, GEOM, K)
            fmag = math.hypot(w.fx, w.fy)
            if fmag == 0:
                continue
            d = 1e-6
            moved = Pose(pose.x + d * w.fx / fmag, pose.y + d * w.fy / fmag, pose.theta)
            w2 = contact_wrench(moved, SOCKET, GEOM, K)
            assert math.hypot(w2.fx, w2.fy) <= fmag + 1e-9


class TestResolve:
    def test_no_contact_untouched(self):
        pose = hover(0.01)
        assert resolve_contacts(pose, SOCKET, GEOM, 0.0005) == pose

    def test_deep_press_capped(self):
        cap = 0.0005
        pose = hover(-0.004, x=0.05)  # tried to sink 4 mm into the table
        res = resolve_contacts(pose, SOCKET, GEOM, cap)
        assert res.y == pytest.approx(GEOM.peg_length - cap, abs=1e-9)
        w = contact_wrench(res, SOCKET, GEOM, K)
        assert w.fy == pytest.approx(2 * K * cap, rel=1e-6)

    def test_chamfer_funnels_toward_center(self):
        # descending onto the right chamfer pushes the peg left toward the slot
        cap = 0.0005
        pose = hover(-0.002, x=0.0012)
        res = resolve_contacts(pose, SOCKET, GEOM, cap)
        assert res.x < pose.x

    def test_resolution_is_deterministic(self):
        pose = hover(-0.003, x=0.0007, theta=0.01)
        a = resolve_contacts(pose, SOCKET, GEOM, 0.0005)
        b = resolve_contacts(pose, SOCKET, GEOM, 0.0005)
        assert a == b
