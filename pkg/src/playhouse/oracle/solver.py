"""Scripted solver: full-state controller that navigates, manipulates and
answers questions in a live world. Used to demonstrate tasks for imitation
and as the competence reference for probe evaluation."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..actions import MovementAction
from ..env.world import (
    FOV_HALF,
    GRID_CELL,
    LOOK_GAIN,
    TURN_GAIN,
    World,
    apparent_half_size,
    project,
    walkability_grid,
    _wrap_angle,
)
from ..env.config import DT

CURSOR_STEP = LOOK_GAIN * DT          # cursor units per tick at full deflection
FLOOR_STAND_MIN = 1.28                # closest stand distance for floor pickup
FLOOR_STAND_MAX = 1.45
RAISED_STAND_MAX = 1.15               # stand distance for furniture pickup
FACE_TOL = 0.35                       # rad; walk only when roughly facing the goal


@dataclass
class SolverConfig:
    move_noise: float = 0.0     # stddev of jitter added to move commands
    idle_ticks: int = 0         # extra idle ticks before acting
    answer_delay: int = 20      # ticks of looking around before answering
    seed: int = 0


@dataclass
class SolverStats:
    replans: int = 0
    grab_attempts: int = 0


def _cell(pos):
    return (int(pos[0] / GRID_CELL), int(pos[1] / GRID_CELL))


def _cell_center(c):
    return ((c[0] + 0.5) * GRID_CELL, (c[1] + 0.5) * GRID_CELL)


def _bfs_field(grid: np.ndarray, start) -> dict:
    """4-connected BFS; returns {cell: parent} over reachable cells."""
    ny, nx = grid.shape
    sx, sy = start
    if not (0 <= sx < nx and 0 <= sy < ny) or not grid[sy, sx]:
        # nudge the start onto the nearest walkable cell
        best, bd = None, None
        ys, xs = np.nonzero(grid)
        for x, y in zip(xs, ys):
            d = (x - sx) ** 2 + (y - sy) ** 2
            if bd is None or d < bd:
                best, bd = (int(x), int(y)), d
        if best is None:
            return {}
        sx, sy = best
    parents = {(sx, sy): None}
    queue = deque([(sx, sy)])
    while queue:
        cx, cy = queue.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            n = (cx + dx, cy + dy)
            if n in parents:
                continue
            if 0 <= n[0] < nx and 0 <= n[1] < ny and grid[n[1], n[0]]:
                parents[n] = (cx, cy)
                queue.append(n)
    return parents


def _path_to(parents: dict, goal) -> list:
    path = []
    c = goal
    while c is not None:
        path.append(c)
        c = parents[c]
    path.reverse()
    return path


def _move_bins(world: World, wx: float, wy: float, noise, rng) -> MovementAction:
    """World-frame direction -> body-frame move command."""
    av = world.avatar
    ch, sh = math.cos(av.heading), math.sin(av.heading)
    mx = sh * wx - ch * wy
    my = ch * wx + sh * wy
    if noise:
        mx += float(rng.normal(0.0, noise))
        my += float(rng.normal(0.0, noise))
    mx = min(1.0, max(-1.0, mx))
    my = min(1.0, max(-1.0, my))
    return MovementAction.from_continuous(move=(mx, my))


class ScriptedSolver:
    """One instance per episode; call act(world) each tick after the
    instruction is known. Emits (MovementAction, utterance_or_None)."""

    def __init__(self, kind: str, target: dict, config: SolverConfig | None = None):
        self.kind = kind
        self.target = target
        self.cfg = config or SolverConfig()
        self.rng = np.random.default_rng(self.cfg.seed)
        self.stats = SolverStats()
        self.done = False
        self._phase = "start"
        self._path: list = []
        self._grid = None
        self._hold = 0
        self._tick = 0
        self._stuck_pos = None
        self._stuck_ticks = 0
        self._retreat_pos = None
        self._retreat_blocked = 0
        self._retreat_ticks = 0
        self._answered = False

    # ------------------------------------------------------------------ api

    def act(self, world: World):
        self._tick += 1
        if self._tick <= self.cfg.idle_ticks:
            return MovementAction(noop=True), None
        if self.kind in ("color", "count", "exist"):
            return self._act_question(world)
        if self.kind == "go":
            return self._act_go(world), None
        if self.kind == "lift":
            return self._act_lift(world), None
        if self.kind == "position":
            return self._act_position(world), None
        if self.kind == "clear":
            return self._act_clear(world), None
        raise ValueError(f"unknown task kind {self.kind}")

    # ------------------------------------------------------------ navigation

    def _ensure_grid(self, world: World):
        if self._grid is None:
            self._grid = walkability_grid(world)
        return self._grid

    def _plan(self, world: World, score) -> bool:
        """Plan a path to the reachable cell minimizing score(x, y)."""
        grid = self._ensure_grid(world)
        parents = _bfs_field(grid, _cell(world.avatar.pos))
        if not parents:
            return False
        best, bs = None, None
        for c in parents:
            s = score(*_cell_center(c))
            if bs is None or s < bs:
                best, bs = c, s
        self._path = [_cell_center(c) for c in _path_to(parents, best)]
        self.stats.replans += 1
        return True

    def _follow(self, world: World) -> MovementAction | None:
        """Advance along the planned path; None once the path is consumed."""
        av = world.avatar
        while self._path:
            tx, ty = self._path[0]
            if math.hypot(tx - av.pos[0], ty - av.pos[1]) < 0.18:
                self._path.pop(0)
            else:
                break
        if not self._path:
            return None
        tx, ty = self._path[0]
        a = self._face_then_move(world, tx, ty)
        if not any(a.move_xy):
            # still turning toward the waypoint: not stuck, just rotating
            self._stuck_ticks = 0
            self._stuck_pos = av.pos
            return a
        # stuck detection: replan if we stop making progress while walking
        if self._stuck_pos is not None and \
                math.hypot(av.pos[0] - self._stuck_pos[0],
                           av.pos[1] - self._stuck_pos[1]) < 0.02:
            self._stuck_ticks += 1
        else:
            self._stuck_ticks = 0
            self._stuck_pos = av.pos
        if self._stuck_ticks > 12:
            self._path = []
            self._stuck_ticks = 0
            return MovementAction.from_continuous(
                move=(float(self.rng.uniform(-1, 1)), float(self.rng.uniform(-1, 1))))
        return a

    # ---------------------------------------------------------- orientation

    def _face_then_move(self, world: World, tx: float, ty: float
                        ) -> MovementAction:
        """Turn until roughly facing (tx, ty), then walk toward it.

        Locomotion stays predictable from the egocentric view this way:
        travel is always near-forward, and direction changes show up as
        visible turns — the behaviour an observation-driven imitator can
        actually reproduce."""
        turn = self._turn_towards(world, tx, ty, tol=FACE_TOL)
        if turn is not None:
            return turn
        av = world.avatar
        dx, dy = tx - av.pos[0], ty - av.pos[1]
        n = math.hypot(dx, dy)
        if n < 1e-9:
            return MovementAction(noop=True)
        return _move_bins(world, dx / n, dy / n, self.cfg.move_noise, self.rng)

    def _turn_towards(self, world: World, tx: float, ty: float,
                      tol: float = 0.05) -> MovementAction | None:
        """Turn the body until the bearing to (tx, ty) is within tol."""
        av = world.avatar
        bearing = _wrap_angle(math.atan2(ty - av.pos[1], tx - av.pos[0]) - av.heading)
        if abs(bearing) <= tol:
            return None
        # once the cursor saturates, a full-deflection tick turns by
        # CURSOR_STEP * TURN_GAIN / LOOK_GAIN radians; aim for the exact
        # bearing so the turn settles instead of oscillating around zero
        full_turn = CURSOR_STEP * TURN_GAIN / LOOK_GAIN
        m = min(1.0, abs(bearing) / full_turn)
        return MovementAction.from_continuous(
            look=(-math.copysign(m, bearing), 0.0))

    def _aim_cursor(self, world: World, sx: float, cy_t: float) -> MovementAction | None:
        """Nudge the cursor toward (sx, cy_t); None when close enough."""
        av = world.avatar
        cx, cy = av.cursor
        ex, ey = sx - cx, cy_t - cy
        if abs(ex) < 0.02 and abs(ey) < 0.02:
            return None
        lx = min(1.0, max(-1.0, ex / CURSOR_STEP))
        ly = min(1.0, max(-1.0, ey / CURSOR_STEP))
        return MovementAction.from_continuous(look=(lx, ly))

    # ------------------------------------------------------------- behaviors

    def _object_xyz(self, world: World, oid: int):
        o = world.object_by_id(oid)
        px, py = world.object_world_pos(o)
        z = world.object_height(o) + 0.35 / 2
        return o, px, py, z

    def _act_go(self, world: World) -> MovementAction:
        _, px, py, _ = self._object_xyz(world, self.target["object_id"])
        av = world.avatar
        dist = math.hypot(px - av.pos[0], py - av.pos[1])
        if dist <= 0.85:
            self._hold += 1
            if self._hold > 20:
                self.done = True
            return MovementAction(noop=True)
        self._hold = 0
        if not self._path:
            self._plan(world, lambda x, y: math.hypot(x - px, y - py))
        a = self._follow(world)
        if a is not None:
            return a
        # path consumed but still too far: walk straight at the target
        return self._face_then_move(world, px, py)

    def _pickup(self, world: World, oid: int) -> MovementAction | None:
        """Drive toward holding object oid; None once it is held."""
        av = world.avatar
        if av.held_object == oid:
            return None
        o, px, py, z = self._object_xyz(world, oid)
        if av.held_object is not None:
            # wrong object in hand: put it down and back off
            self.stats.grab_attempts += 1
            return MovementAction.from_continuous(grab=True)
        on_floor = o.support == "floor"
        d_lo = FLOOR_STAND_MIN if on_floor else 0.55
        d_hi = FLOOR_STAND_MAX if on_floor else RAISED_STAND_MAX
        dist = math.hypot(px - av.pos[0], py - av.pos[1])
        if self._path:
            # rerouting to the stand ring after a failed local adjustment
            a = self._follow(world)
            if a is not None:
                return a
        if dist > d_hi:
            if not self._path:
                mid = (d_lo + d_hi) / 2
                self._plan(world, lambda x, y: abs(math.hypot(x - px, y - py) - mid))
            a = self._follow(world)
            if a is not None:
                return a
            dist = math.hypot(px - av.pos[0], py - av.pos[1])
            if dist > d_hi:
                return self._face_then_move(world, px, py)
        if dist < d_lo:
            return self._retreat(world, px, py, dist, (d_lo + d_hi) / 2)
        turn = self._turn_towards(world, px, py)
        if turn is not None:
            return turn
        proj = project(world, px, py, z)
        if proj is None:
            return self._turn_towards(world, px, py) or MovementAction(noop=True)
        sx, sy, d = proj
        cy_t = min(1.0, max(-1.0, (z - 1.2) / d / 0.65))
        aim = self._aim_cursor(world, min(0.95, max(-0.95, sx)), cy_t)
        if aim is not None:
            return aim
        radius = max(world.config.pick_radius, apparent_half_size(d))
        cdist = math.hypot(sx - av.cursor[0], sy - av.cursor[1])
        if cdist <= radius and dist <= world.config.reach:
            if self._cursor_nearest(world) == oid:
                self.stats.grab_attempts += 1
                return MovementAction.from_continuous(grab=True)
            # another object sits closer to the cursor and would be picked
            # instead: sidestep to change the view
            ux, uy = (px - av.pos[0]) / dist, (py - av.pos[1]) / dist
            return _move_bins(world, -uy, ux, 0.0, self.rng)
        # cursor is placed but the pick window is not satisfied: step back
        return self._retreat(world, px, py, dist, (d_lo + d_hi) / 2)

    def _cursor_nearest(self, world: World) -> int | None:
        """Id of the object _try_pick would choose from the current pose."""
        av = world.avatar
        best, bd = None, None
        for o in world.objects:
            if o.support.startswith("container:"):
                continue
            px, py = world.object_world_pos(o)
            if math.hypot(px - av.pos[0], py - av.pos[1]) > world.config.reach:
                continue
            z = world.object_height(o) + 0.35 / 2
            proj = project(world, px, py, z)
            if proj is None:
                continue
            sx, sy, d = proj
            radius = max(world.config.pick_radius, apparent_half_size(d))
            cdist = math.hypot(sx - av.cursor[0], sy - av.cursor[1])
            if cdist <= radius and (bd is None or cdist < bd):
                best, bd = o.id, cdist
        return best

    def _retreat(self, world: World, px: float, py: float, dist: float,
                 ring: float) -> MovementAction:
        """Back away from (px, py); if walls pocket us in, reroute along the
        walkability grid to a point at distance ring from the target."""
        av = world.avatar
        self._retreat_ticks += 1
        if self._retreat_pos is not None and \
                math.hypot(av.pos[0] - self._retreat_pos[0],
                           av.pos[1] - self._retreat_pos[1]) < 0.01:
            self._retreat_blocked += 1
        else:
            self._retreat_blocked = 0
        self._retreat_pos = av.pos
        if self._retreat_blocked > 15 or self._retreat_ticks > 40:
            self._retreat_blocked = 0
            self._retreat_ticks = 0
            self._plan(world, lambda x, y: abs(math.hypot(x - px, y - py) - ring))
            a = self._follow(world)
            if a is not None:
                return a
        ux, uy = (av.pos[0] - px) / dist, (av.pos[1] - py) / dist
        if self._retreat_blocked > 6:
            side = 1.0 if (self._retreat_blocked // 20) % 2 == 0 else -1.0
            ux, uy = -uy * side, ux * side
        return _move_bins(world, ux, uy, 0.0, self.rng)

    def _act_lift(self, world: World) -> MovementAction:
        oid = self.target["object_id"]
        a = self._pickup(world, oid)
        if a is not None:
            return a
        self._hold += 1
        if self._hold > 20:
            self.done = True
        return MovementAction(noop=True)

    def _act_position(self, world: World) -> MovementAction:
        xid, yid = self.target["x_id"], self.target["y_id"]
        av = world.avatar
        if self._phase in ("start", "fetch"):
            self._phase = "fetch"
            a = self._pickup(world, xid)
            if a is not None:
                return a
            self._phase = "carry"
            self._path = []
        _, yx, yy, _ = self._object_xyz(world, yid)
        dist = math.hypot(yx - av.pos[0], yy - av.pos[1])
        if self._phase == "carry":
            if dist > 1.25:
                if not self._path:
                    self._plan(world, lambda x, y: abs(math.hypot(x - yx, y - yy) - 1.05))
                a = self._follow(world)
                if a is not None:
                    return a
                if dist > 1.4:
                    return self._face_then_move(world, yx, yy)
            turn = self._turn_towards(world, yx, yy, tol=0.12)
            if turn is not None:
                return turn
            # drop: the held object sits 0.8 m ahead, well inside the near zone
            self._phase = "placed"
            self.stats.grab_attempts += 1
            return MovementAction.from_continuous(grab=True)
        self._hold += 1
        if self._hold > 10:
            self.done = True
        return MovementAction(noop=True)

    # ----------------------------------------------------------------- clear

    def _drop_point_blocked(self, world: World) -> bool:
        """Would releasing now land the object back on a raised surface?"""
        av = world.avatar
        dx = av.pos[0] + math.cos(av.heading) * av.hold_distance
        dy = av.pos[1] + math.sin(av.heading) * av.hold_distance
        margin = 0.2
        for f in world.furniture:
            x0, y0, x1, y1 = f.rect
            if x0 - margin <= dx <= x1 + margin and \
                    y0 - margin <= dy <= y1 + margin:
                return True
        return False

    def _act_clear(self, world: World) -> MovementAction:
        fid = self.target["furniture_id"]
        f = world.furniture_by_id(fid)
        av = world.avatar
        fx, fy = f.pos
        if av.held_object is not None:
            # carry the grabbed object off the surface and drop it on
            # open floor, facing away so the release lands clear
            dist = math.hypot(fx - av.pos[0], fy - av.pos[1])
            if dist < 2.0:
                if not self._path:
                    self._plan(world,
                               lambda x, y: abs(math.hypot(x - fx, y - fy) - 2.4))
                a = self._follow(world)
                if a is not None:
                    return a
                return self._face_then_move(world, 2 * av.pos[0] - fx,
                                            2 * av.pos[1] - fy)
            turn = self._turn_towards(world, 2 * av.pos[0] - fx,
                                      2 * av.pos[1] - fy, tol=0.3)
            if turn is not None:
                return turn
            if self._drop_point_blocked(world):
                ux, uy = math.cos(av.heading), math.sin(av.heading)
                return _move_bins(world, -uy, ux, 0.0, self.rng)
            self._path = []
            self.stats.grab_attempts += 1
            return MovementAction.from_continuous(grab=True)
        key = f"furniture:{fid}"
        remaining = [o for o in world.objects if o.support == key]
        if not remaining:
            self._hold += 1
            if self._hold > 10:
                self.done = True
            return MovementAction(noop=True)
        self._hold = 0
        nearest = min(remaining,
                      key=lambda o: math.hypot(
                          world.object_world_pos(o)[0] - av.pos[0],
                          world.object_world_pos(o)[1] - av.pos[1]))
        a = self._pickup(world, nearest.id)
        if a is not None:
            return a
        self._path = []
        return MovementAction(noop=True)

    # -------------------------------------------------------------- question

    def _act_question(self, world: World):
        from .setter import answer_text
        if self._answered:
            self._hold += 1
            if self._hold > 10:
                self.done = True
            return MovementAction(noop=True), None
        if self._tick < self.cfg.idle_ticks + self.cfg.answer_delay:
            # glance around while "thinking"
            return MovementAction.from_continuous(look=(0.6, 0.0)), None
        self._answered = True
        return MovementAction(noop=True), answer_text(self.kind, self.target, self.rng)
