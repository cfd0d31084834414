"""Episode records and binary shard storage.

Episodes store per-tick actions plus utterance events and the world seed;
rasters are a deterministic replay product and may optionally be embedded.
Shard = <name>.idx (JSON index) + <name>.rec (concatenated binary records),
all integers little-endian.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..actions import (LanguageAction, MovementAction, pack_language,
                       pack_movement, unpack_language, unpack_movement,
                       MOVEMENT_WIRE_SIZE)
from ..env import config as envconfig

RECORD_MAGIC = b"EPR1"


class ShardError(Exception):
    pass


@dataclass
class UtteranceEvent:
    tick: int
    role: str            # "setter" | "solver"
    text: str


@dataclass
class EpisodeStep:
    movement: MovementAction
    language: LanguageAction = field(default_factory=LanguageAction)


@dataclass
class EpisodeMeta:
    world_seed: int
    config_text: str             # serialized EnvConfig
    source: str = "oracle"       # oracle | human
    roles: str = "setter:oracle,solver:oracle"
    wall_clock: float = 0.0
    probe_kind: str = ""         # set when the world came from spawn_probe
    extra: dict = field(default_factory=dict)


@dataclass
class Episode:
    meta: EpisodeMeta
    steps: list[EpisodeStep]
    utterances: list[UtteranceEvent]
    rasters: np.ndarray | None = None   # optional [T, h, w, 3] uint8

    _config_cache: envconfig.EnvConfig | None = field(default=None, repr=False,
                                                      compare=False)

    @property
    def T(self) -> int:
        return len(self.steps)

    @property
    def config(self) -> envconfig.EnvConfig:
        if self._config_cache is None:
            self._config_cache = envconfig.loads(self.meta.config_text)
        return self._config_cache

    def validate(self) -> None:
        limit = self.config.episode_ticks
        if self.T > limit:
            raise ValueError(f"episode length {self.T} exceeds limit {limit}")
        for ev in self.utterances:
            if not 0 <= ev.tick <= self.T:
                raise ValueError(f"utterance tick {ev.tick} outside episode")
            if ev.role not in ("setter", "solver"):
                raise ValueError(f"bad utterance role {ev.role}")
        if self.rasters is not None and len(self.rasters) != self.T:
            raise ValueError("raster count does not match step count")


def sticky_language(episode: Episode) -> list[str]:
    """Per-tick language observation: latest setter utterance at or before t,
    empty before the first one."""
    events = sorted([ev for ev in episode.utterances if ev.role == "setter"],
                    key=lambda e: e.tick)
    out = []
    current = ""
    k = 0
    for t in range(episode.T):
        while k < len(events) and events[k].tick <= t:
            current = events[k].text
            k += 1
        out.append(current)
    return out


# ---------------------------------------------------------------------------
# binary record codec


def encode_episode(ep: Episode) -> bytes:
    ep.validate()
    meta = {
        "world_seed": ep.meta.world_seed,
        "config_text": ep.meta.config_text,
        "source": ep.meta.source,
        "roles": ep.meta.roles,
        "wall_clock": ep.meta.wall_clock,
        "probe_kind": ep.meta.probe_kind,
        "extra": ep.meta.extra,
    }
    mb = json.dumps(meta, sort_keys=True).encode("utf-8")
    parts = [RECORD_MAGIC, struct.pack("<I", len(mb)), mb,
             struct.pack("<I", ep.T)]
    for st in ep.steps:
        parts.append(pack_movement(st.movement))
    for st in ep.steps:
        parts.append(pack_language(st.language))
    parts.append(struct.pack("<I", len(ep.utterances)))
    for ev in ep.utterances:
        tb = ev.text.encode("utf-8")
        parts.append(struct.pack("<IBH", ev.tick, 0 if ev.role == "setter" else 1,
                                 len(tb)))
        parts.append(tb)
    if ep.rasters is None:
        parts.append(struct.pack("<B", 0))
    else:
        r = np.ascontiguousarray(ep.rasters, dtype=np.uint8)
        parts.append(struct.pack("<B", 1))
        parts.append(struct.pack("<III", *r.shape[:3]))
        parts.append(r.tobytes())
    return b"".join(parts)


def decode_episode(buf: bytes, offset: int = 0) -> Episode:
    if buf[offset:offset + 4] != RECORD_MAGIC:
        raise ShardError(f"bad record magic at offset {offset}")
    off = offset + 4
    (mlen,) = struct.unpack_from("<I", buf, off)
    off += 4
    meta_d = json.loads(buf[off:off + mlen].decode("utf-8"))
    off += mlen
    (T,) = struct.unpack_from("<I", buf, off)
    off += 4
    movements = []
    for _ in range(T):
        a, off = unpack_movement(buf, off)
        movements.append(a)
    languages = []
    for _ in range(T):
        a, off = unpack_language(buf, off)
        languages.append(a)
    (n_ev,) = struct.unpack_from("<I", buf, off)
    off += 4
    events = []
    for _ in range(n_ev):
        tick, role_b, tlen = struct.unpack_from("<IBH", buf, off)
        off += 7
        text = buf[off:off + tlen].decode("utf-8")
        off += tlen
        events.append(UtteranceEvent(tick=tick, role="setter" if role_b == 0
                                     else "solver", text=text))
    has_rasters = buf[off]
    off += 1
    rasters = None
    if has_rasters:
        t_, h, w = struct.unpack_from("<III", buf, off)
        off += 12
        n = t_ * h * w * 3
        rasters = np.frombuffer(buf, dtype=np.uint8, count=n,
                                offset=off).reshape(t_, h, w, 3).copy()
        off += n
    meta = EpisodeMeta(world_seed=meta_d["world_seed"],
                       config_text=meta_d["config_text"],
                       source=meta_d["source"], roles=meta_d["roles"],
                       wall_clock=meta_d["wall_clock"],
                       probe_kind=meta_d.get("probe_kind", ""),
                       extra=meta_d.get("extra", {}))
    steps = [EpisodeStep(movement=m, language=l)
             for m, l in zip(movements, languages)]
    return Episode(meta=meta, steps=steps, utterances=events, rasters=rasters)


# ---------------------------------------------------------------------------
# shards


class ShardWriter:
    """Single-writer append-only shard."""

    def __init__(self, path_base):
        self.base = Path(path_base)
        self.rec_path = self.base.with_suffix(".rec")
        self.idx_path = self.base.with_suffix(".idx")
        self._offsets: list[list[int]] = []
        self._f = open(self.rec_path, "wb")

    def append(self, ep: Episode) -> int:
        buf = encode_episode(ep)
        off = self._f.tell()
        self._f.write(buf)
        self._offsets.append([off, len(buf)])
        return len(self._offsets) - 1

    def close(self) -> None:
        self._f.close()
        self.idx_path.write_text(json.dumps(
            {"version": 1, "records": self._offsets}, indent=0))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ShardReader:
    """Random-access reader; safe to use concurrently on distinct shards."""

    def __init__(self, path_base):
        self.base = Path(path_base)
        self.rec_path = self.base.with_suffix(".rec")
        self.idx_path = self.base.with_suffix(".idx")
        if not self.idx_path.exists():
            raise ShardError(f"missing shard index {self.idx_path}")
        idx = json.loads(self.idx_path.read_text())
        if idx.get("version") != 1:
            raise ShardError(f"{self.idx_path}: unsupported index version")
        self.records = idx["records"]
        self._data = self.rec_path.read_bytes()

    def __len__(self):
        return len(self.records)

    def __getitem__(self, index: int) -> Episode:
        return self.read(index)

    def read(self, index: int) -> Episode:
        if not 0 <= index < len(self.records):
            raise ShardError(
                f"record index {index} out of range for shard {self.base.name} "
                f"({len(self.records)} records)")
        off, length = self.records[index]
        try:
            return decode_episode(self._data[off:off + length])
        except (ShardError, KeyError, ValueError, IndexError,
                struct.error, UnicodeDecodeError) as e:
            raise ShardError(
                f"corrupt record in shard {self.base.name} at offset {off}: {e}")


def write_episode(ep: Episode, shard_base) -> int:
    """Append one episode to a shard (creating or extending it)."""
    base = Path(shard_base)
    if base.with_suffix(".idx").exists():
        reader = ShardReader(base)
        eps = [reader.read(i) for i in range(len(reader))]
    else:
        eps = []
    eps.append(ep)
    with ShardWriter(base) as wtr:
        for e in eps:
            wtr.append(e)
    return len(eps) - 1


def read_episode(shard_base, index: int = 0) -> Episode:
    return ShardReader(shard_base).read(index)
