"""Environment configuration and its human-readable file format."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

CONFIG_FORMAT = "playhouse-env-config"
CONFIG_VERSION = 1

DEFAULT_CATALOG = ("duck", "book", "ball", "cup", "block", "plane", "bottle", "bus")
EXTENSION_SHAPE = "drum"
COLORS = ("red", "blue", "green", "yellow", "purple", "orange")

TICK_HZ = 15
DT = 1.0 / TICK_HZ


@dataclass(frozen=True)
class EnvConfig:
    rooms_min: int = 2
    rooms_max: int = 4
    objects_min: int = 6
    objects_max: int = 20
    raster_width: int = 96
    raster_height: int = 72
    episode_ticks: int = 900
    catalog: tuple[str, ...] = DEFAULT_CATALOG
    colors: tuple[str, ...] = COLORS
    pick_radius: float = 0.1
    reach: float = 1.5
    max_speed: float = 2.0

    def __post_init__(self):
        if self.rooms_min < 1 or self.rooms_max > 4 or self.rooms_min > self.rooms_max:
            raise ValueError(f"invalid room range ({self.rooms_min}, {self.rooms_max})")
        if self.objects_min < 1 or self.objects_min > self.objects_max:
            raise ValueError("invalid object count range")
        if self.raster_width < 16 or self.raster_height < 12:
            raise ValueError("raster too small")

    def with_catalog(self, catalog) -> "EnvConfig":
        return replace(self, catalog=tuple(catalog))

    def hash(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()[:16]


def dumps(cfg: EnvConfig) -> str:
    lines = [f"# {CONFIG_FORMAT} v{CONFIG_VERSION}"]
    for k, v in asdict(cfg).items():
        if isinstance(v, tuple):
            v = ",".join(v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> EnvConfig:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(f"# {CONFIG_FORMAT} v"):
        raise ValueError("missing config format header")
    version = int(lines[0].rsplit("v", 1)[1])
    if version != CONFIG_VERSION:
        raise ValueError(f"unsupported config version {version}")
    kwargs = {}
    fields_ = EnvConfig.__dataclass_fields__
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        key, _, raw = ln.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in fields_:
            raise ValueError(f"unknown config key {key}")
        ftype = fields_[key].type
        if key in ("catalog", "colors"):
            kwargs[key] = tuple(s.strip() for s in raw.split(",") if s.strip())
        elif ftype == "int":
            kwargs[key] = int(raw)
        elif ftype == "float":
            kwargs[key] = float(raw)
        else:
            kwargs[key] = raw
    return EnvConfig(**kwargs)


def save(cfg: EnvConfig, path) -> None:
    Path(path).write_text(dumps(cfg))


def load(path) -> EnvConfig:
    return loads(Path(path).read_text())


# desk-scale training default: quarter-resolution raster for CPU feasibility
TRAIN_DEFAULT = EnvConfig(raster_width=48, raster_height=36,
                          rooms_min=2, rooms_max=3,
                          objects_min=6, objects_max=12,
                          episode_ticks=900)
