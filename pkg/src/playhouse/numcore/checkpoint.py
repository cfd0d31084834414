"""Self-describing checkpoint container.

Layout (all integers little-endian unsigned 32-bit unless noted):
  magic "MIAC" | format version | header length + UTF-8 JSON header |
  parameter count | records.
Record: name length + UTF-8 name | dtype tag (1 byte: 0=f32, 1=f64) |
  rank | dims | raw little-endian float payload.
Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MIAC"
VERSION = 1

_DTYPE_TAGS = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
_TAG_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class CheckpointError(Exception):
    pass


def save_checkpoint(path, arrays: dict[str, np.ndarray], header: dict | None = None):
    path = Path(path)
    hdr = json.dumps(header or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(hdr)))
        f.write(hdr)
        f.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            a = np.ascontiguousarray(arr)
            dt = a.dtype.newbyteorder("<")
            if np.dtype(dt) not in _DTYPE_TAGS:
                raise CheckpointError(f"unsupported dtype {a.dtype} for {name}")
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<B", _DTYPE_TAGS[np.dtype(dt)]))
            f.write(struct.pack("<I", a.ndim))
            for d in a.shape:
                f.write(struct.pack("<I", d))
            f.write(a.astype(dt, copy=False).tobytes())


def load_checkpoint(path):
    """Returns (arrays dict, header dict)."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:4]!r}")
    off = 4

    def u32():
        nonlocal off
        (v,) = struct.unpack_from("<I", data, off)
        off += 4
        return v

    version = u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    hlen = u32()
    header = json.loads(data[off:off + hlen].decode("utf-8")) if hlen else {}
    off += hlen
    count = u32()
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        nlen = u32()
        name = data[off:off + nlen].decode("utf-8")
        off += nlen
        tag = data[off]
        off += 1
        if tag not in _TAG_DTYPES:
            raise CheckpointError(f"{path}: unknown dtype tag {tag} for {name}")
        rank = u32()
        shape = tuple(u32() for _ in range(rank))
        dt = _TAG_DTYPES[tag]
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype=dt, count=n, offset=off).reshape(shape)
        off += n * dt.itemsize
        arrays[name] = arr.copy()
    return arrays, header
