"""Wire protocol for live interaction sessions: newline-delimited JSON
messages validated against the JSON schema shipped in wire-schema.json."""

from __future__ import annotations

import base64
import json
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

PROTOCOL_VERSION = 1
SCHEMA_FILE = "wire-schema.json"

MESSAGE_TYPES = ("hello", "start", "frame", "setter_text", "rate", "end",
                 "error")

# error codes (documented in the schema's `error` definition)
BAD_JSON = "bad_json"
UNKNOWN_TYPE = "unknown_type"
INVALID_MESSAGE = "invalid_message"
NO_SUCH_CHECKPOINT = "no_such_checkpoint"
NO_SESSION = "no_session"
SESSION_ACTIVE = "session_active"
NOT_ENDED = "not_ended"
ALREADY_RATED = "already_rated"


class ProtocolError(Exception):
    def __init__(self, code: str, detail: str = ""):
        super().__init__(detail or code)
        self.code = code
        self.detail = detail


@lru_cache(maxsize=1)
def wire_schema() -> dict:
    text = resources.files(__package__).joinpath(SCHEMA_FILE).read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(msg_type: str) -> jsonschema.Validator:
    schema = dict(wire_schema()["definitions"][msg_type])
    schema["definitions"] = wire_schema()["definitions"]
    return jsonschema.Draft7Validator(schema)


def validate_message(obj) -> dict:
    """Check one decoded message against the schema; returns it, or raises
    ProtocolError with code unknown_type / invalid_message."""
    if not isinstance(obj, dict) or not isinstance(obj.get("type"), str):
        raise ProtocolError(INVALID_MESSAGE, "message must be an object "
                            "with a string `type` field")
    if obj["type"] not in MESSAGE_TYPES:
        raise ProtocolError(UNKNOWN_TYPE, f"unknown type {obj['type']!r}")
    errors = list(_validator(obj["type"]).iter_errors(obj))
    if errors:
        raise ProtocolError(INVALID_MESSAGE, errors[0].message)
    return obj


def encode(obj: dict) -> bytes:
    """One validated message as a newline-terminated JSON line."""
    validate_message(obj)
    return (json.dumps(obj, separators=(",", ":")) + "\n").encode()


def decode_line(line: bytes | str) -> dict:
    """Parse and validate one received line; raises ProtocolError."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(BAD_JSON, str(exc)) from exc
    return validate_message(obj)


def encode_pixels(pixels: np.ndarray) -> str:
    """[H,W,3] uint8 raster as base64 of the raw row-major bytes."""
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    return base64.b64encode(arr.tobytes()).decode("ascii")


def decode_pixels(data: str, height: int, width: int) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"), validate=True)
    if len(raw) != height * width * 3:
        raise ProtocolError(INVALID_MESSAGE,
                            f"pixel payload is {len(raw)} bytes, expected "
                            f"{height * width * 3}")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3)
