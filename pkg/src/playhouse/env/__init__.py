from .config import (EnvConfig, TRAIN_DEFAULT, COLORS, DEFAULT_CATALOG,
                     EXTENSION_SHAPE, TICK_HZ, DT)
from .world import (World, Room, Furniture, ObjectInstance, AvatarState,
                    generate_world, step, step_inplace, project,
                    walkability_grid, WorldGenError)
from .render import render
from .probes import (ProbeTask, PROBE_KINDS, CLEAR_KIND, spawn_probe,
                     spawn_clear_probe, evaluate_probe, instruction_for,
                     ProbeError)

__all__ = [
    "EnvConfig", "TRAIN_DEFAULT", "COLORS", "DEFAULT_CATALOG", "EXTENSION_SHAPE",
    "TICK_HZ", "DT", "World", "Room", "Furniture", "ObjectInstance",
    "AvatarState", "generate_world", "step", "step_inplace", "project",
    "walkability_grid", "WorldGenError", "render", "ProbeTask", "PROBE_KINDS",
    "CLEAR_KIND", "spawn_probe", "spawn_clear_probe", "evaluate_probe",
    "instruction_for", "ProbeError",
]
