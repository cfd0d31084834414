"""Discretized action representation: uniform bin codecs for move/look,
recursive ternary interval codes for rotation and push/pull, no-op flags,
the fixed cross-head conditioning order, and the binary wire encoding used
inside trajectory records.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

MOVE_BINS = 101
LOOK_BINS = 51
RECURSIVE_DEPTH = 3  # final interval width 2/27 < 0.1
MAX_LANGUAGE_TOKENS = 25


@dataclass(frozen=True)
class BinnedSpace:
    lo: float = -1.0
    hi: float = 1.0
    bins: int = 51

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if not self.hi > self.lo:
            raise ValueError("hi must exceed lo")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins


MOVE_SPACE = BinnedSpace(bins=MOVE_BINS)
LOOK_SPACE = BinnedSpace(bins=LOOK_BINS)


def encode_bin(value: float, space: BinnedSpace) -> int:
    """Clamp value into [lo, hi] and return its bin index (ties floor down)."""
    if math.isnan(value):
        raise ValueError("cannot encode NaN")
    v = min(max(value, space.lo), space.hi)
    idx = int(math.floor((v - space.lo) / space.width))
    return min(idx, space.bins - 1)


def decode_bin(index: int, space: BinnedSpace) -> float:
    if not 0 <= index < space.bins:
        raise ValueError(f"bin index {index} out of range for {space.bins} bins")
    return space.lo + (index + 0.5) * space.width


def encode_recursive(value: float, depth: int = RECURSIVE_DEPTH) -> tuple[int, ...]:
    """Ternary interval refinement of [-1, 1]; each level picks one of 3
    equal sub-intervals of the current interval."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if math.isnan(value):
        raise ValueError("cannot encode NaN")
    # ternary digits of (value+1)/2 in [0,1]; ties resolve downward
    p = (min(max(value, -1.0), 1.0) + 1.0) / 2.0
    choices = []
    for _ in range(depth):
        p *= 3.0
        c = min(int(p), 2)
        choices.append(c)
        p -= c
    return tuple(choices)


def decode_recursive(choices) -> float:
    """Center of the final sub-interval, computed exactly in integers."""
    num = 0
    for c in choices:
        if c not in (0, 1, 2):
            raise ValueError(f"invalid recursive choice {c}")
        num = num * 3 + (c - 1)
    return 2.0 * num / (3 ** len(choices))


def recursive_resolution(depth: int = RECURSIVE_DEPTH) -> float:
    return 2.0 / (3 ** depth)


@dataclass
class MovementAction:
    noop: bool = True
    move: tuple[int, int] = (MOVE_BINS // 2, MOVE_BINS // 2)
    look: tuple[int, int] = (LOOK_BINS // 2, LOOK_BINS // 2)
    rotation: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]] = (
        (1,) * RECURSIVE_DEPTH, (1,) * RECURSIVE_DEPTH, (1,) * RECURSIVE_DEPTH)
    push_pull: tuple[int, ...] = (1,) * RECURSIVE_DEPTH
    grab: bool = False

    def validate(self) -> None:
        for b in self.move:
            if not 0 <= b < MOVE_BINS:
                raise ValueError(f"move bin {b} out of range")
        for b in self.look:
            if not 0 <= b < LOOK_BINS:
                raise ValueError(f"look bin {b} out of range")
        for axis in self.rotation:
            if len(axis) != RECURSIVE_DEPTH:
                raise ValueError("rotation code depth mismatch")
            for c in axis:
                if c not in (0, 1, 2):
                    raise ValueError(f"invalid rotation choice {c}")
        if len(self.push_pull) != RECURSIVE_DEPTH:
            raise ValueError("push/pull code depth mismatch")

    @property
    def move_xy(self) -> tuple[float, float]:
        return (decode_bin(self.move[0], MOVE_SPACE),
                decode_bin(self.move[1], MOVE_SPACE))

    @property
    def look_xy(self) -> tuple[float, float]:
        return (decode_bin(self.look[0], LOOK_SPACE),
                decode_bin(self.look[1], LOOK_SPACE))

    @property
    def rotation_xyz(self) -> tuple[float, float, float]:
        return tuple(decode_recursive(ax) for ax in self.rotation)

    @property
    def push_pull_value(self) -> float:
        return decode_recursive(self.push_pull)

    @staticmethod
    def from_continuous(move=(0.0, 0.0), look=(0.0, 0.0), rotation=(0.0, 0.0, 0.0),
                        push_pull=0.0, grab=False, noop=False) -> "MovementAction":
        return MovementAction(
            noop=noop,
            move=(encode_bin(move[0], MOVE_SPACE), encode_bin(move[1], MOVE_SPACE)),
            look=(encode_bin(look[0], LOOK_SPACE), encode_bin(look[1], LOOK_SPACE)),
            rotation=tuple(encode_recursive(r) for r in rotation),
            push_pull=encode_recursive(push_pull),
            grab=grab)


@dataclass
class LanguageAction:
    noop: bool = True
    tokens: tuple[int, ...] = ()

    def validate(self, vocab_size: int | None = None) -> None:
        if len(self.tokens) > MAX_LANGUAGE_TOKENS:
            raise ValueError(
                f"utterance length {len(self.tokens)} exceeds {MAX_LANGUAGE_TOKENS}")
        if vocab_size is not None:
            for t in self.tokens:
                if not 0 <= t < vocab_size:
                    raise ValueError(f"token id {t} out of vocabulary ({vocab_size})")


# --------------------------------------------------------------------------
# conditioning order across movement heads (single tick; no cross-time links)

HEAD_NAMES = ("move", "look", "rotation", "push_pull")


@dataclass(frozen=True)
class DependencyOrder:
    order: tuple[str, ...] = HEAD_NAMES
    conditioning: dict = field(default_factory=lambda: {
        "move": frozenset(),
        "look": frozenset({"move"}),
        "rotation": frozenset({"move", "look"}),
        "push_pull": frozenset({"move", "look", "rotation"}),
    })
    # within-head autoregressive links
    intra: dict = field(default_factory=lambda: {
        "look": (("x", "y"),),              # x conditions y
        "rotation": (("x", "z"), ("y", "z")),  # x and y condition z
    })

    def conditioning_set(self, head: str) -> frozenset:
        return self.conditioning[head]

    def topological(self) -> tuple[str, ...]:
        return self.order


def dependency_order() -> DependencyOrder:
    return DependencyOrder()


# --------------------------------------------------------------------------
# wire encoding inside trajectory records: fixed field order, little-endian
# 16-bit bin indices, one byte per recursive choice, flags packed in a byte

_FLAG_NOOP = 1
_FLAG_GRAB = 2


def pack_movement(a: MovementAction) -> bytes:
    a.validate()
    flags = (_FLAG_NOOP if a.noop else 0) | (_FLAG_GRAB if a.grab else 0)
    parts = [struct.pack("<B", flags),
             struct.pack("<4H", a.move[0], a.move[1], a.look[0], a.look[1])]
    for axis in a.rotation:
        parts.append(bytes(axis))
    parts.append(bytes(a.push_pull))
    return b"".join(parts)


MOVEMENT_WIRE_SIZE = 1 + 8 + 3 * RECURSIVE_DEPTH + RECURSIVE_DEPTH


def unpack_movement(buf: bytes, offset: int = 0) -> tuple[MovementAction, int]:
    flags = buf[offset]
    mx, my, lx, ly = struct.unpack_from("<4H", buf, offset + 1)
    p = offset + 9
    rot = []
    for _ in range(3):
        rot.append(tuple(buf[p:p + RECURSIVE_DEPTH]))
        p += RECURSIVE_DEPTH
    pp = tuple(buf[p:p + RECURSIVE_DEPTH])
    p += RECURSIVE_DEPTH
    a = MovementAction(noop=bool(flags & _FLAG_NOOP), move=(mx, my), look=(lx, ly),
                       rotation=tuple(rot), push_pull=pp, grab=bool(flags & _FLAG_GRAB))
    a.validate()
    return a, p


def pack_language(a: LanguageAction) -> bytes:
    a.validate()
    head = struct.pack("<BB", _FLAG_NOOP if a.noop else 0, len(a.tokens))
    return head + struct.pack(f"<{len(a.tokens)}H", *a.tokens)


def unpack_language(buf: bytes, offset: int = 0) -> tuple[LanguageAction, int]:
    flags, n = struct.unpack_from("<BB", buf, offset)
    toks = struct.unpack_from(f"<{n}H", buf, offset + 2)
    return LanguageAction(noop=bool(flags & _FLAG_NOOP), tokens=tuple(toks)), offset + 2 + 2 * n
