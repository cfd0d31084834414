"""Egocentric 2.5-D rasterizer: column raycast walls + depth-tested sprites.

Deterministic function of World state. Output is uint8 RGB, shape (h, w, 3).
"""

from __future__ import annotations

import math

import numpy as np

from .world import (World, FOV_HALF, EYE_HEIGHT, WALL_HEIGHT, OBJECT_SIZE,
                    OBJECT_HEIGHT, FURNITURE_SIZE, _wrap_angle)

COLOR_RGB = {
    "red": (220, 45, 45),
    "blue": (45, 90, 230),
    "green": (45, 185, 70),
    "yellow": (235, 215, 50),
    "purple": (165, 60, 210),
    "orange": (240, 145, 35),
}
FURNITURE_RGB = {
    "table": (150, 100, 60),
    "shelf": (110, 78, 48),
    "stool": (175, 135, 90),
    "container": (95, 95, 115),
}
WALL_RGB = np.array([205, 202, 192], dtype=np.float32)
FLOOR_RGB = np.array([125, 122, 108], dtype=np.float32)
CEIL_RGB = np.array([232, 232, 238], dtype=np.float32)

# visually distinct marker slots so each shape reads differently on screen
SHAPE_SLOTS = 12


def shape_slot(shape: str, catalog) -> int:
    try:
        return list(catalog).index(shape) % SHAPE_SLOTS
    except ValueError:
        return (sum(shape.encode()) % SHAPE_SLOTS)


def render(world: World) -> np.ndarray:
    w = world.config.raster_width
    h = world.config.raster_height
    av = world.avatar
    img = np.empty((h, w, 3), dtype=np.float32)

    pitch = av.cursor[1] * 0.35
    rows = np.arange(h, dtype=np.float32)
    # normalized screen y (+up): 1 at top row, -1 at bottom row
    row_y = 1.0 - 2.0 * (rows + 0.5) / h

    # per-column ray directions
    cols = np.arange(w, dtype=np.float32)
    sx = 2.0 * (cols + 0.5) / w - 1.0
    bearing = -sx * FOV_HALF
    ang = av.heading + bearing
    dirx, diry = np.cos(ang), np.sin(ang)

    # nearest wall hit per column
    t_wall = np.full(w, 1e9, dtype=np.float32)
    px, py = av.pos
    for (x0, y0, x1, y1) in world.walls:
        if x0 == x1:  # vertical segment
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (x0 - px) / dirx
            yhit = py + t * diry
            ok = (t > 0) & (yhit >= min(y0, y1) - 1e-6) & (yhit <= max(y0, y1) + 1e-6)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (y0 - py) / diry
            xhit = px + t * dirx
            ok = (t > 0) & (xhit >= min(x0, x1) - 1e-6) & (xhit <= max(x0, x1) + 1e-6)
        t = np.where(ok, t, 1e9)
        t_wall = np.minimum(t_wall, t)
    d_wall = np.maximum(t_wall * np.cos(bearing), 0.12)

    # wall band in screen y: from floor line to wall top
    y_bot = (0.0 - EYE_HEIGHT) / d_wall + pitch
    y_top = (WALL_HEIGHT - EYE_HEIGHT) / d_wall + pitch
    shade = np.clip(1.1 / (1.0 + 0.18 * d_wall), 0.3, 1.0)
    yg = row_y[:, None]
    wall_mask = (yg >= y_bot[None, :]) & (yg <= y_top[None, :])
    floor_mask = yg < y_bot[None, :]
    img[:] = CEIL_RGB
    img[floor_mask.nonzero()] = FLOOR_RGB
    wm = wall_mask.nonzero()
    img[wm] = WALL_RGB[None, :] * shade[wm[1]][:, None]

    # sprites: furniture and objects, painter order far -> near,
    # per-column depth test against walls
    entities = []
    for f in world.furniture:
        entities.append(("furniture", f))
    for o in world.objects:
        if o.support.startswith("container:"):
            continue  # hidden inside
        entities.append(("object", o))

    drawn = []
    for kind, e in entities:
        if kind == "furniture":
            ex, ey = e.pos
            z0, z1 = 0.0, e.height
            size = FURNITURE_SIZE[e.kind][0]
            rgb = FURNITURE_RGB[e.kind]
            slot = None
        else:
            ex, ey = world.object_world_pos(e)
            z0 = world.object_height(e)
            z1 = z0 + OBJECT_HEIGHT
            size = OBJECT_SIZE
            rgb = COLOR_RGB[e.color]
            slot = shape_slot(e.shape, world.config.catalog)
        dx, dy = ex - px, ey - py
        dist = math.hypot(dx, dy)
        brg = _wrap_angle(math.atan2(dy, dx) - av.heading)
        if abs(brg) > FOV_HALF * 1.35 or dist < 0.12:
            continue
        d = max(dist * math.cos(brg), 0.12)
        drawn.append((d, brg, z0, z1, size, rgb, slot))
    drawn.sort(key=lambda t: -t[0])

    half_fov_px = w / 2.0
    for d, brg, z0, z1, size, rgb, slot in drawn:
        cx_px = (-brg / FOV_HALF + 1.0) / 2.0 * w
        half_w = (size / (2.0 * d)) / FOV_HALF * half_fov_px
        c0 = int(max(0, math.floor(cx_px - half_w)))
        c1 = int(min(w, math.ceil(cx_px + half_w)))
        if c1 <= c0:
            continue
        vis = np.nonzero(d <= d_wall[c0:c1] + 0.12)[0]
        if vis.size == 0:
            continue
        y1s = (z1 - EYE_HEIGHT) / d + pitch
        y0s = (z0 - EYE_HEIGHT) / d + pitch
        r_top = int(max(0, math.floor((1.0 - y1s) / 2.0 * h)))
        r_bot = int(min(h, math.ceil((1.0 - y0s) / 2.0 * h)))
        if r_bot <= r_top:
            continue
        cols_vis = vis + c0
        img[r_top:r_bot, cols_vis, :] = np.asarray(rgb, dtype=np.float32)
        if slot is not None:
            # shape marker: dark stripe at a slot-specific height fraction
            frac = (slot + 0.5) / SHAPE_SLOTS
            height_px = r_bot - r_top
            s0 = r_top + int(frac * height_px)
            s1 = min(r_bot, s0 + max(1, height_px // 6))
            img[s0:s1, cols_vis, :] = np.asarray(rgb, dtype=np.float32) * 0.25

    _draw_cursor(img, av.cursor)
    return img.astype(np.uint8)


def _draw_cursor(img: np.ndarray, cursor) -> None:
    h, w, _ = img.shape
    cx = int((cursor[0] + 1.0) / 2.0 * (w - 1))
    cy = int((1.0 - cursor[1]) / 2.0 * (h - 1))
    cx = min(max(cx, 1), w - 2)
    cy = min(max(cy, 1), h - 2)
    img[cy, max(0, cx - 2):cx + 3, :] = 255.0
    img[max(0, cy - 2):cy + 3, cx, :] = 255.0
    img[cy, cx, :] = 0.0
