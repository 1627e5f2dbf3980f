"""Low-resolution wrist-camera raster of the scene.

Orthographic grayscale view centered on the peg tip (the camera rides the
wrist, so the peg stays put in the image and the board/socket move through
the frame). Antialiased by supersampling so sub-pixel motion still changes
pixel values -- the visual features need that to resolve offsets smaller
than a pixel.
"""

from __future__ import annotations

import math

import numpy as np

from ..frames import Pose
from .types import Geometry

BACKGROUND = 0.15
BOARD = 0.55
BEZEL = 0.80
PEG = 0.95

DEFAULT_RESOLUTION = 32
DEFAULT_VIEW_HALFWIDTH = 0.045
# bright socket bezel: the connector's visible body around the opening, a
# texture on the board (contact geometry is untouched)
BEZEL_HALFWIDTH = 0.009
SUPERSAMPLE = 4


def _board_mask(x: np.ndarray, y: np.ndarray, geom: Geometry) -> np.ndarray:
    """Solid-board mask for points in the socket frame."""
    w2 = geom.socket_width / 2.0
    c = geom.chamfer_width
    u = np.abs(x)
    solid = (y <= 0.0) & (u <= geom.surface_halfwidth)
    in_slot = (u < w2) & (y > -geom.socket_depth)
    solid &= ~in_slot
    if c > 0.0:
        in_wedge = (u >= w2) & ((u - w2) - y - c < 0.0) & (y <= 0.0)
        solid &= ~in_wedge
    return solid


def _peg_mask(x: np.ndarray, y: np.ndarray, peg: Pose, geom: Geometry) -> np.ndarray:
    cs, ss = math.cos(peg.theta), math.sin(peg.theta)
    dx, dy = x - peg.x, y - peg.y
    lx = cs * dx + ss * dy
    ly = -ss * dx + cs * dy
    return (np.abs(lx) <= geom.peg_width / 2.0) & (ly <= 0.0) & (ly >= -geom.peg_length)


def render(
    state,
    geom: Geometry,
    resolution: int = DEFAULT_RESOLUTION,
    view_halfwidth: float = DEFAULT_VIEW_HALFWIDTH,
    view_center: tuple[float, float] | None = None,
) -> np.ndarray:
    """Rasterize `state` (scene frame) to a (resolution, resolution) float
    image in [0, 1]. Deterministic function of the state."""
    if resolution < 16:
        raise ValueError("resolution must be at least 16x16")
    peg: Pose = state.peg
    socket: Pose = state.socket
    if view_center is None:
        from .env import peg_tip

        view_center = peg_tip(peg, geom)

    n = resolution * SUPERSAMPLE
    px = 2.0 * view_halfwidth / n
    # pixel-center coordinates; row 0 is the top of the image
    xs = view_center[0] - view_halfwidth + (np.arange(n) + 0.5) * px
    ys = view_center[1] + view_halfwidth - (np.arange(n) + 0.5) * px
    gx, gy = np.meshgrid(xs, ys)

    # into the socket frame for the board mask
    cs, ss = math.cos(socket.theta), math.sin(socket.theta)
    bx = cs * (gx - socket.x) + ss * (gy - socket.y)
    by = -ss * (gx - socket.x) + cs * (gy - socket.y)

    img = np.full((n, n), BACKGROUND)
    board = _board_mask(bx, by, geom)
    img[board] = BOARD
    img[board & (np.abs(bx) <= BEZEL_HALFWIDTH)] = BEZEL
    img[_peg_mask(gx, gy, peg, geom)] = PEG

    # average-pool the supersampled grid down to the requested resolution
    s = SUPERSAMPLE
    return img.reshape(resolution, s, resolution, s).mean(axis=(1, 3))
