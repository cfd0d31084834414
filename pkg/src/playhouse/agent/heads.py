"""Movement action factorization: one categorical component per decision,
wired by the conditioning DAG from playhouse.actions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..actions import (LOOK_BINS, MOVE_BINS, RECURSIVE_DEPTH, MovementAction,
                       dependency_order)


@dataclass(frozen=True)
class Component:
    name: str
    classes: int
    cond: tuple[str, ...]    # names of earlier components whose chosen values
                             # condition this one (teacher forced in training)


def movement_components() -> tuple[Component, ...]:
    """Per-tick decision list in sampling order, consistent with the
    declared head DAG (move -> look -> rotation -> push_pull) and the
    within-head links (look x->y; rotation x,y -> z; recursive digits chain)."""
    dep = dependency_order()
    comps: list[Component] = [Component("noop", 2, ())]
    groups: dict[str, tuple[str, ...]] = {}

    def cond_of(head: str) -> tuple[str, ...]:
        names: list[str] = []
        for h in dep.conditioning_set(head):
            names.extend(groups[h])
        return tuple(sorted(names))

    # move: unconditioned root
    comps += [Component("move_x", MOVE_BINS, ()),
              Component("move_y", MOVE_BINS, ())]
    groups["move"] = ("move_x", "move_y")
    # look: x conditions y
    base = cond_of("look")
    comps += [Component("look_x", LOOK_BINS, base),
              Component("look_y", LOOK_BINS, base + ("look_x",))]
    groups["look"] = ("look_x", "look_y")
    # rotation: three recursive-code axes; digits chain within an axis,
    # and the x, y axes condition z
    base = cond_of("rotation")
    rot_names: list[str] = []
    for axis in ("x", "y", "z"):
        extra = tuple(rot_names) if axis == "z" else ()
        chain: tuple[str, ...] = ()
        for d in range(RECURSIVE_DEPTH):
            name = f"rot_{axis}_{d}"
            comps.append(Component(name, 3, base + extra + chain))
            chain += (name,)
        if axis != "z":
            rot_names.extend(chain)
    groups["rotation"] = tuple(c.name for c in comps if c.name.startswith("rot_"))
    # push_pull: recursive digit chain conditioned on everything earlier
    base = cond_of("push_pull")
    chain = ()
    for d in range(RECURSIVE_DEPTH):
        name = f"pp_{d}"
        comps.append(Component(name, 3, base + chain))
        chain += (name,)
    groups["push_pull"] = tuple(f"pp_{d}" for d in range(RECURSIVE_DEPTH))
    # grab: last, sees the whole movement decision
    all_prev = tuple(c.name for c in comps if c.name != "noop")
    comps.append(Component("grab", 2, all_prev))
    return tuple(comps)


MOVEMENT_COMPONENTS = movement_components()
COMPONENT_INDEX = {c.name: i for i, c in enumerate(MOVEMENT_COMPONENTS)}


def action_to_values(a: MovementAction) -> dict[str, int]:
    v = {"noop": int(a.noop), "move_x": a.move[0], "move_y": a.move[1],
         "look_x": a.look[0], "look_y": a.look[1], "grab": int(a.grab)}
    for ai, axis in enumerate(("x", "y", "z")):
        for d in range(RECURSIVE_DEPTH):
            v[f"rot_{axis}_{d}"] = a.rotation[ai][d]
    for d in range(RECURSIVE_DEPTH):
        v[f"pp_{d}"] = a.push_pull[d]
    return v


def values_to_action(v: dict[str, int]) -> MovementAction:
    return MovementAction(
        noop=bool(v["noop"]),
        move=(int(v["move_x"]), int(v["move_y"])),
        look=(int(v["look_x"]), int(v["look_y"])),
        rotation=tuple(tuple(int(v[f"rot_{axis}_{d}"])
                             for d in range(RECURSIVE_DEPTH))
                       for axis in ("x", "y", "z")),
        push_pull=tuple(int(v[f"pp_{d}"]) for d in range(RECURSIVE_DEPTH)),
        grab=bool(v["grab"]))


def batch_component_targets(batch: dict) -> dict[str, np.ndarray]:
    """Flatten the minibatch movement targets to {component: [B,K,P]} arrays."""
    out = {"noop": batch["mv_noop"], "grab": batch["mv_grab"],
           "move_x": batch["mv_move"][..., 0], "move_y": batch["mv_move"][..., 1],
           "look_x": batch["mv_look"][..., 0], "look_y": batch["mv_look"][..., 1]}
    for ai, axis in enumerate(("x", "y", "z")):
        for d in range(RECURSIVE_DEPTH):
            out[f"rot_{axis}_{d}"] = batch["mv_rot"][..., ai, d]
    for d in range(RECURSIVE_DEPTH):
        out[f"pp_{d}"] = batch["mv_pp"][..., d]
    return out


def uniform_movement_nats() -> float:
    """Negative log-likelihood of one non-noop tick under uniform heads."""
    return float(sum(np.log(c.classes) for c in MOVEMENT_COMPONENTS))
