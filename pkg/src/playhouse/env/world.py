"""Procedural multi-room world: generation, kinematic stepping, projection.

Geometry is 2-D top-down (positions in meters); rendering elsewhere gives an
egocentric 2.5-D view. One World instance is single-threaded by contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..actions import MovementAction
from .config import EnvConfig, DT

ROOM_W = 4.0
ROOM_H = 3.5
DOOR_WIDTH = 1.2
WALL_HALF = 0.05
AVATAR_RADIUS = 0.25
WALL_HEIGHT = 2.2
EYE_HEIGHT = 1.2
FOV_HALF = math.pi / 4
LOOK_GAIN = 3.0          # cursor units per second at full deflection
TURN_GAIN = 2.4          # radians per second once the cursor saturates
ROT_RATE = 2.0           # radians per second of object rotation
HOLD_MIN, HOLD_MAX = 0.45, 1.2
FURNITURE_HEIGHT = {"table": 0.75, "shelf": 0.9, "stool": 0.45, "container": 0.5}
FURNITURE_SIZE = {"table": (1.1, 0.7), "shelf": (0.9, 0.35),
                  "stool": (0.45, 0.45), "container": (0.55, 0.55)}
OBJECT_SIZE = 0.32
OBJECT_HEIGHT = 0.35
SURFACE_KINDS = ("table", "shelf", "stool")


@dataclass
class Room:
    id: int
    rect: tuple[float, float, float, float]  # x0, y0, x1, y1

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.rect
        return x0 <= x <= x1 and y0 <= y <= y1


@dataclass
class Furniture:
    id: int
    kind: str
    pos: tuple[float, float]
    room: int

    @property
    def rect(self) -> tuple[float, float, float, float]:
        w, h = FURNITURE_SIZE[self.kind]
        return (self.pos[0] - w / 2, self.pos[1] - h / 2,
                self.pos[0] + w / 2, self.pos[1] + h / 2)

    @property
    def height(self) -> float:
        return FURNITURE_HEIGHT[self.kind]


@dataclass
class ObjectInstance:
    id: int
    shape: str
    color: str
    pos: tuple[float, float]
    support: str   # "floor" | "furniture:<id>" | "container:<id>" | "held"
    orientation: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass
class AvatarState:
    pos: tuple[float, float]
    heading: float
    cursor: tuple[float, float] = (0.0, 0.0)
    held_object: int | None = None
    hold_distance: float = 0.8


@dataclass
class World:
    seed: int
    config: EnvConfig
    rooms: list[Room]
    walls: list[tuple[float, float, float, float]]   # thin axis-aligned segments
    doorways: list[tuple[float, float]]
    furniture: list[Furniture]
    objects: list[ObjectInstance]
    avatar: AvatarState
    tick: int = 0
    extent: tuple[float, float] = (8.0, 3.5)

    def clone(self) -> "World":
        return World(
            seed=self.seed, config=self.config, rooms=self.rooms, walls=self.walls,
            doorways=self.doorways,
            furniture=self.furniture,
            objects=[replace(o) for o in self.objects],
            avatar=replace(self.avatar),
            tick=self.tick, extent=self.extent)

    def object_by_id(self, oid: int) -> ObjectInstance:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(f"no object with id {oid}")

    def furniture_by_id(self, fid: int) -> Furniture:
        for f in self.furniture:
            if f.id == fid:
                return f
        raise KeyError(f"no furniture with id {fid}")

    def room_at(self, x: float, y: float) -> int:
        for r in self.rooms:
            if r.contains(x, y):
                return r.id
        return 0

    def object_height(self, o: ObjectInstance) -> float:
        """World z of the object's base."""
        if o.support.startswith("furniture:"):
            return self.furniture_by_id(int(o.support.split(":")[1])).height
        if o.support.startswith("container:"):
            return 0.1
        if o.support == "held":
            return 0.6
        return 0.0

    def object_world_pos(self, o: ObjectInstance) -> tuple[float, float]:
        if o.support == "held":
            av = self.avatar
            return (av.pos[0] + math.cos(av.heading) * av.hold_distance,
                    av.pos[1] + math.sin(av.heading) * av.hold_distance)
        return o.pos


class WorldGenError(Exception):
    pass


def _layout(n_rooms: int) -> tuple[int, int]:
    return {2: (2, 1), 3: (3, 1), 4: (2, 2)}[n_rooms]


def generate_world(seed: int, config: EnvConfig | None = None) -> World:
    """Deterministic procedural world. Same seed -> structurally identical."""
    config = config or EnvConfig()
    rng = np.random.default_rng(np.uint64(seed))
    n_rooms = int(rng.integers(config.rooms_min, config.rooms_max + 1))
    if n_rooms < 1:
        raise WorldGenError("need at least one room")
    nx, ny = _layout(max(2, n_rooms)) if n_rooms >= 2 else (1, 1)
    extent = (nx * ROOM_W, ny * ROOM_H)

    rooms = []
    for j in range(ny):
        for i in range(nx):
            rooms.append(Room(id=len(rooms),
                              rect=(i * ROOM_W, j * ROOM_H,
                                    (i + 1) * ROOM_W, (j + 1) * ROOM_H)))

    walls: list[tuple[float, float, float, float]] = []
    W, H = extent
    walls += [(0, 0, W, 0), (0, H, W, H), (0, 0, 0, H), (W, 0, W, H)]
    doorways = []
    # vertical partitions between horizontally adjacent cells
    for i in range(1, nx):
        for j in range(ny):
            x = i * ROOM_W
            y0, y1 = j * ROOM_H, (j + 1) * ROOM_H
            gap_c = float(rng.uniform(y0 + 0.9, y1 - 0.9))
            walls.append((x, y0, x, gap_c - DOOR_WIDTH / 2))
            walls.append((x, gap_c + DOOR_WIDTH / 2, x, y1))
            doorways.append((x, gap_c))
    # horizontal partitions between vertically adjacent cells
    for j in range(1, ny):
        for i in range(nx):
            y = j * ROOM_H
            x0, x1 = i * ROOM_W, (i + 1) * ROOM_W
            gap_c = float(rng.uniform(x0 + 0.9, x1 - 0.9))
            walls.append((x0, y, gap_c - DOOR_WIDTH / 2, y))
            walls.append((gap_c + DOOR_WIDTH / 2, y, x1, y))
            doorways.append((gap_c, y))

    furniture: list[Furniture] = []
    for room in rooms:
        kinds = ["table" if rng.random() < 0.5 else
                 ("shelf" if rng.random() < 0.5 else "stool")]
        if rng.random() < 0.45:
            kinds.append("container")
        for kind in kinds:
            placed = _place_furniture(rng, room, kind, furniture, doorways)
            if placed is not None:
                furniture.append(placed)
    if not any(f.kind in SURFACE_KINDS for f in furniture):
        raise WorldGenError("no surface furniture placed")

    n_objects = int(rng.integers(config.objects_min, config.objects_max + 1))
    objects: list[ObjectInstance] = []
    surfaces = [f for f in furniture if f.kind in SURFACE_KINDS]
    containers = [f for f in furniture if f.kind == "container"]
    for oid in range(n_objects):
        shape = str(rng.choice(config.catalog))
        color = str(rng.choice(config.colors))
        u = rng.random()
        if u < 0.25 and surfaces:
            f = surfaces[int(rng.integers(len(surfaces)))]
            x0, y0, x1, y1 = f.rect
            pos = (float(rng.uniform(x0 + 0.1, x1 - 0.1)),
                   float(rng.uniform(y0 + 0.1, y1 - 0.1)))
            support = f"furniture:{f.id}"
        elif u < 0.32 and containers:
            f = containers[int(rng.integers(len(containers)))]
            pos = f.pos
            support = f"container:{f.id}"
        else:
            pos = _sample_floor_point(rng, rooms, furniture, objects, extent)
            support = "floor"
        objects.append(ObjectInstance(id=oid, shape=shape, color=color,
                                      pos=pos, support=support))

    av_pos = _sample_floor_point(rng, rooms, furniture, objects, extent,
                                 clearance=0.5)
    avatar = AvatarState(pos=av_pos, heading=float(rng.uniform(-math.pi, math.pi)))
    return World(seed=seed, config=config, rooms=rooms, walls=walls,
                 doorways=doorways, furniture=furniture, objects=objects,
                 avatar=avatar, extent=extent)


def _place_furniture(rng, room, kind, existing, doorways):
    x0, y0, x1, y1 = room.rect
    w, h = FURNITURE_SIZE[kind]
    for _ in range(60):
        px = float(rng.uniform(x0 + w / 2 + 0.55, x1 - w / 2 - 0.55))
        py = float(rng.uniform(y0 + h / 2 + 0.55, y1 - h / 2 - 0.55))
        ok = all(math.hypot(px - f.pos[0], py - f.pos[1]) > 1.3 for f in existing)
        ok = ok and all(math.hypot(px - dx, py - dy) > 1.3 for dx, dy in doorways)
        if ok:
            return Furniture(id=len(existing), kind=kind, pos=(px, py), room=room.id)
    return None


def _sample_floor_point(rng, rooms, furniture, objects, extent, clearance=0.35):
    for _ in range(200):
        room = rooms[int(rng.integers(len(rooms)))]
        x0, y0, x1, y1 = room.rect
        px = float(rng.uniform(x0 + 0.5, x1 - 0.5))
        py = float(rng.uniform(y0 + 0.5, y1 - 0.5))
        ok = True
        for f in furniture:
            fx0, fy0, fx1, fy1 = f.rect
            if fx0 - clearance < px < fx1 + clearance and \
               fy0 - clearance < py < fy1 + clearance:
                ok = False
                break
        if ok and all(o.support != "floor" or
                      math.hypot(px - o.pos[0], py - o.pos[1]) > clearance
                      for o in objects):
            return (px, py)
    raise WorldGenError("could not sample a free floor point")


# ---------------------------------------------------------------------------
# collision


def _blocked(world: World, x: float, y: float) -> bool:
    r = AVATAR_RADIUS
    W, H = world.extent
    if x < r or y < r or x > W - r or y > H - r:
        return True
    for (wx0, wy0, wx1, wy1) in world.walls:
        # expand the thin segment into a box
        bx0, by0 = min(wx0, wx1) - WALL_HALF - r, min(wy0, wy1) - WALL_HALF - r
        bx1, by1 = max(wx0, wx1) + WALL_HALF + r, max(wy0, wy1) + WALL_HALF + r
        if bx0 < x < bx1 and by0 < y < by1:
            return True
    for f in world.furniture:
        fx0, fy0, fx1, fy1 = f.rect
        if fx0 - r < x < fx1 + r and fy0 - r < y < fy1 + r:
            return True
    return False


# ---------------------------------------------------------------------------
# projection shared by rendering and grabbing


def project(world: World, tx: float, ty: float, z: float = 0.0):
    """Project a world point to normalized screen coords.

    Returns (sx, sy, d) with sx, sy in [-1, 1] screen units (+y up) and d
    the forward distance, or None when behind / outside the view cone.
    """
    av = world.avatar
    dx, dy = tx - av.pos[0], ty - av.pos[1]
    dist = math.hypot(dx, dy)
    if dist < 0.05:
        return None
    bearing = _wrap_angle(math.atan2(dy, dx) - av.heading)
    if abs(bearing) > FOV_HALF * 1.25:
        return None
    d = dist * math.cos(bearing)
    if d < 0.12:
        return None
    sx = -bearing / FOV_HALF
    pitch = av.cursor[1] * 0.35
    sy = (z - EYE_HEIGHT) / d + pitch
    return sx, sy, d


def _wrap_angle(a: float) -> float:
    while a > math.pi:
        a -= 2 * math.pi
    while a < -math.pi:
        a += 2 * math.pi
    return a


def apparent_half_size(d: float) -> float:
    """Angular half-size of an object at distance d, in screen x units."""
    return (OBJECT_SIZE / (2 * d)) / FOV_HALF


# ---------------------------------------------------------------------------
# stepping


def step(world: World, action: MovementAction) -> World:
    """Advance one 15 Hz tick. Functional: returns a stepped clone."""
    w = world.clone()
    step_inplace(w, action)
    return w


def step_inplace(world: World, action: MovementAction) -> None:
    world.tick += 1
    if action.noop:
        return
    action.validate()
    av = world.avatar

    # look: cursor motion; lateral overflow turns the body
    lx, ly = action.look_xy
    cx = av.cursor[0] + lx * LOOK_GAIN * DT
    cy = min(1.0, max(-1.0, av.cursor[1] + ly * LOOK_GAIN * DT))
    if cx > 1.0:
        av.heading = _wrap_angle(av.heading - (cx - 1.0) * (TURN_GAIN / LOOK_GAIN / DT) * DT)
        cx = 1.0
    elif cx < -1.0:
        av.heading = _wrap_angle(av.heading - (cx + 1.0) * (TURN_GAIN / LOOK_GAIN / DT) * DT)
        cx = -1.0
    av.cursor = (cx, cy)

    # move: body frame, y forward, x strafe right
    mx, my = action.move_xy
    speed = world.config.max_speed
    ch, sh = math.cos(av.heading), math.sin(av.heading)
    vx = (my * ch + mx * sh) * speed * DT
    vy = (my * sh - mx * ch) * speed * DT
    nx, ny = av.pos[0] + vx, av.pos[1]
    if not _blocked(world, nx, ny):
        av.pos = (nx, av.pos[1])
    nx, ny = av.pos[0], av.pos[1] + vy
    if not _blocked(world, nx, ny):
        av.pos = (av.pos[0], ny)

    held = None if av.held_object is None else world.object_by_id(av.held_object)

    # rotation / push-pull act on a held object only
    if held is not None:
        rx, ry, rz = action.rotation_xyz
        ox, oy, oz = held.orientation
        held.orientation = (ox + rx * ROT_RATE * DT, oy + ry * ROT_RATE * DT,
                            oz + rz * ROT_RATE * DT)
        pp = action.push_pull_value
        av.hold_distance = min(HOLD_MAX, max(HOLD_MIN, av.hold_distance + pp * DT))

    if action.grab:
        if held is not None:
            _release(world, held)
        else:
            _try_pick(world)

    if av.held_object is not None:
        obj = world.object_by_id(av.held_object)
        obj.pos = world.object_world_pos(obj)


def _try_pick(world: World) -> None:
    av = world.avatar
    best = None
    best_dist = None
    for o in world.objects:
        if o.support.startswith("container:"):
            continue  # inside a container: not grabbable from outside
        px, py = world.object_world_pos(o)
        if math.hypot(px - av.pos[0], py - av.pos[1]) > world.config.reach:
            continue
        z = world.object_height(o) + OBJECT_HEIGHT / 2
        proj = project(world, px, py, z)
        if proj is None:
            continue
        sx, sy, d = proj
        radius = max(world.config.pick_radius, apparent_half_size(d))
        cdist = math.hypot(sx - av.cursor[0], sy - av.cursor[1])
        if cdist <= radius and (best is None or cdist < best_dist):
            best, best_dist = o, cdist
    if best is not None:
        best.support = "held"
        av.held_object = best.id
        av.hold_distance = 0.8


def _release(world: World, obj: ObjectInstance) -> None:
    av = world.avatar
    drop_x, drop_y = world.object_world_pos(obj)
    # prefer a furniture surface (or container) under the drop point
    for f in world.furniture:
        fx0, fy0, fx1, fy1 = f.rect
        m = 0.15
        if fx0 - m < drop_x < fx1 + m and fy0 - m < drop_y < fy1 + m:
            cx = min(max(drop_x, fx0 + 0.05), fx1 - 0.05)
            cy = min(max(drop_y, fy0 + 0.05), fy1 - 0.05)
            obj.pos = (cx, cy)
            obj.support = (f"container:{f.id}" if f.kind == "container"
                           else f"furniture:{f.id}")
            av.held_object = None
            return
    W, H = world.extent
    obj.pos = (min(max(drop_x, 0.15), W - 0.15), min(max(drop_y, 0.15), H - 0.15))
    obj.support = "floor"
    av.held_object = None


# ---------------------------------------------------------------------------
# walkability grid (pathfinding support for the scripted solver)

GRID_CELL = 0.25


def walkability_grid(world: World) -> np.ndarray:
    W, H = world.extent
    nx, ny = int(W / GRID_CELL), int(H / GRID_CELL)
    grid = np.ones((ny, nx), dtype=bool)
    for j in range(ny):
        for i in range(nx):
            x, y = (i + 0.5) * GRID_CELL, (j + 0.5) * GRID_CELL
            if _blocked(world, x, y):
                grid[j, i] = False
    return grid
