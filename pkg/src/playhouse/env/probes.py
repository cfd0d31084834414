"""Scripted probe tasks: templated instructions plus evaluation-only reward
models. Reward predicates are reachable only through evaluate_probe; the
training loss path has no import of this module (enforced by a test).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import EnvConfig
from .world import World, generate_world, step_inplace

PROBE_KINDS = ("go", "lift", "position", "color", "count", "exist")
CLEAR_KIND = "clear"    # extension verb, outside the six standard probes

TIME_LIMITS = {"go": 450, "lift": 600, "position": 900,
               "color": 450, "count": 450, "exist": 450,
               CLEAR_KIND: 1350}

HOLD_TICKS = 15          # consecutive ticks required for go / lift
NEAR_DISTANCE = 1.0      # meters

COLOR_SYNONYMS = {
    "red": {"red", "crimson", "scarlet", "maroon"},
    "blue": {"blue", "light blue", "cyan", "sky blue", "navy", "azure"},
    "green": {"green", "lime", "olive", "emerald"},
    "yellow": {"yellow", "gold", "amber"},
    "purple": {"purple", "violet", "magenta", "lavender"},
    "orange": {"orange", "tangerine"},
}

NUMBER_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11,
    "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
    "twenty": 20,
}


@dataclass
class ProbeTask:
    kind: str
    instruction: str
    world_seed: int
    time_limit: int
    target: dict = field(default_factory=dict)


class ProbeError(Exception):
    pass


def _unique_color_shape(world: World):
    """Objects whose (color, shape) pair is unique and not hidden in a container."""
    pairs = {}
    for o in world.objects:
        pairs.setdefault((o.color, o.shape), []).append(o)
    return [objs[0] for (c, s), objs in pairs.items()
            if len(objs) == 1 and not objs[0].support.startswith("container:")]


def _unique_shape(world: World):
    shapes = {}
    for o in world.objects:
        shapes.setdefault(o.shape, []).append(o)
    return [objs[0] for s, objs in shapes.items()
            if len(objs) == 1 and not objs[0].support.startswith("container:")]


def _world_candidate(kind: str, world: World):
    """Kind-specific satisfiability check; returns target dict or None."""
    if kind in ("go", "lift"):
        cands = _unique_color_shape(world)
        if kind == "lift":
            cands = [o for o in cands if o.support == "floor" or
                     o.support.startswith("furniture:")]
        # require a walk: targets the avatar already stands next to are trivial
        ax, ay = world.avatar.pos
        cands = [o for o in cands
                 if math.hypot(o.pos[0] - ax, o.pos[1] - ay) > 2.0]
        if not cands:
            return None
        o = cands[0]
        return {"object_id": o.id, "color": o.color, "shape": o.shape}
    if kind == "position":
        cands = _unique_shape(world)
        floor_cands = [o for o in cands if o.support == "floor"]
        if len(cands) < 2 or not floor_cands:
            return None
        x = floor_cands[0]
        y = next((o for o in cands if o.id != x.id), None)
        if y is None:
            return None
        return {"x_id": x.id, "x_shape": x.shape, "y_id": y.id, "y_shape": y.shape}
    if kind == "color":
        cands = _unique_shape(world)
        if not cands:
            return None
        o = cands[0]
        return {"object_id": o.id, "shape": o.shape, "color": o.color}
    if kind == "count":
        visible = {}
        hidden = set()
        for o in world.objects:
            if o.support.startswith("container:"):
                hidden.add(o.shape)
            else:
                visible[o.shape] = visible.get(o.shape, 0) + 1
        usable = [(s, n) for s, n in sorted(visible.items())
                  if s not in hidden and 1 <= n <= 5]
        if not usable:
            return None
        shape, n = usable[world.seed % len(usable)]
        return {"shape": shape, "count": n}
    if kind == "exist":
        present = {(o.color, o.shape) for o in world.objects
                   if not o.support.startswith("container:")}
        hidden = {(o.color, o.shape) for o in world.objects
                  if o.support.startswith("container:")}
        want_yes = world.seed % 2 == 0
        if want_yes:
            cands = sorted(present - hidden)
            if not cands:
                return None
            color, shape = cands[world.seed % len(cands)]
            return {"color": color, "shape": shape, "answer": "yes"}
        all_pairs = [(c, s) for c in world.config.colors for s in world.config.catalog]
        absent = sorted(set(all_pairs) - present - hidden)
        if not absent:
            return None
        color, shape = absent[world.seed % len(absent)]
        return {"color": color, "shape": shape, "answer": "no"}
    raise ProbeError(f"unknown probe kind {kind}")


def instruction_for(kind: str, target: dict) -> str:
    if kind == "go":
        return f"go to the {target['color']} {target['shape']}"
    if kind == "lift":
        return f"lift the {target['color']} {target['shape']}"
    if kind == "position":
        return f"put the {target['x_shape']} near the {target['y_shape']}"
    if kind == "color":
        return f"what color is the {target['shape']}"
    if kind == "count":
        return f"how many {target['shape']}s are there"
    if kind == "exist":
        return f"is there a {target['color']} {target['shape']}"
    if kind == CLEAR_KIND:
        return f"clear the {target['furniture_kind']}"
    raise ProbeError(f"unknown probe kind {kind}")


def spawn_probe(kind: str, seed: int, config: EnvConfig | None = None):
    """Deterministic satisfiable (World, ProbeTask) pair for the given seed."""
    if kind not in PROBE_KINDS:
        raise ProbeError(f"unknown probe kind {kind}")
    config = config or EnvConfig()
    for attempt in range(200):
        ws = seed * 1009 + attempt
        try:
            world = generate_world(ws, config)
        except Exception:
            continue
        target = _world_candidate(kind, world)
        if target is None:
            continue
        task = ProbeTask(kind=kind, instruction=instruction_for(kind, target),
                         world_seed=ws, time_limit=TIME_LIMITS[kind], target=target)
        return world, task
    raise ProbeError(f"could not spawn satisfiable {kind} probe for seed {seed}")


def spawn_clear_probe(seed: int, config: EnvConfig | None = None,
                      max_objects: int = 3):
    """Deterministic (World, ProbeTask) for the clear-the-surface verb: a
    raised surface holding one to ``max_objects`` objects."""
    config = config or EnvConfig()
    for attempt in range(200):
        ws = seed * 1013 + attempt
        try:
            world = generate_world(ws, config)
        except Exception:
            continue
        loaded = {}
        for o in world.objects:
            if o.support.startswith("furniture:"):
                loaded.setdefault(int(o.support.split(":")[1]), []).append(o)
        for f in world.furniture:
            n = len(loaded.get(f.id, ()))
            if 1 <= n <= max_objects:
                target = {"furniture_id": f.id, "furniture_kind": f.kind,
                          "count": n}
                task = ProbeTask(kind=CLEAR_KIND,
                                 instruction=instruction_for(CLEAR_KIND, target),
                                 world_seed=ws,
                                 time_limit=TIME_LIMITS[CLEAR_KIND],
                                 target=target)
                return world, task
    raise ProbeError(f"could not spawn satisfiable clear probe for seed {seed}")


# ---------------------------------------------------------------------------
# evaluation-only reward models


def _utterance_texts(episode) -> list[str]:
    return [ev.text.lower() for ev in episode.utterances if ev.role == "solver"]


def first_numeral(text: str):
    for tok in text.replace("?", " ").replace(".", " ").split():
        if tok.isdigit():
            return int(tok)
        if tok in NUMBER_WORDS:
            return NUMBER_WORDS[tok]
    return None


def mentions_color(text: str, color: str) -> bool:
    return any(syn in text for syn in COLOR_SYNONYMS[color])


def evaluate_probe(task: ProbeTask, episode) -> bool:
    """Scripted success predicate over a recorded episode (evaluation only)."""
    if task.kind in ("color", "count", "exist"):
        texts = _utterance_texts(episode)
        if task.kind == "color":
            return any(mentions_color(t, task.target["color"]) for t in texts)
        if task.kind == "count":
            for t in texts:
                n = first_numeral(t)
                if n is not None:
                    return n == task.target["count"]
            return False
        # exist: first clear yes/no wins
        for t in texts:
            words = set(t.replace("?", " ").split())
            if "yes" in words or "no" in words:
                has_yes = "yes" in words
                return ("yes" if has_yes else "no") == task.target["answer"]
        return False

    # movement predicates need the world trajectory: deterministic replay
    world = generate_world(task.world_seed, episode.config)
    streak = 0
    if task.kind == "go":
        target_id = task.target["object_id"]
        for st in episode.steps:
            step_inplace(world, st.movement)
            o = world.object_by_id(target_id)
            ox, oy = world.object_world_pos(o)
            d = math.hypot(ox - world.avatar.pos[0], oy - world.avatar.pos[1])
            streak = streak + 1 if d <= NEAR_DISTANCE else 0
            if streak >= HOLD_TICKS:
                return True
        return False
    if task.kind == "lift":
        target_id = task.target["object_id"]
        for st in episode.steps:
            step_inplace(world, st.movement)
            streak = streak + 1 if world.avatar.held_object == target_id else 0
            if streak >= HOLD_TICKS:
                return True
        return False
    if task.kind == "position":
        for st in episode.steps:
            step_inplace(world, st.movement)
        x = world.object_by_id(task.target["x_id"])
        y = world.object_by_id(task.target["y_id"])
        if x.support == "held":
            return False
        xx, xy = world.object_world_pos(x)
        yx, yy = world.object_world_pos(y)
        return math.hypot(xx - yx, xy - yy) <= NEAR_DISTANCE
    if task.kind == CLEAR_KIND:
        for st in episode.steps:
            step_inplace(world, st.movement)
        key = f"furniture:{task.target['furniture_id']}"
        return not any(o.support == key for o in world.objects)
    raise ProbeError(f"unknown probe kind {task.kind}")
