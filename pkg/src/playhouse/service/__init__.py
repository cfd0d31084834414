"""Live interaction: session server, wire protocol, and a scripted client."""

from .client import WireClient
from .protocol import (PROTOCOL_VERSION, ProtocolError, decode_line,
                       decode_pixels, encode, encode_pixels, validate_message,
                       wire_schema)
from .server import InteractServer

__all__ = [
    "InteractServer", "PROTOCOL_VERSION", "ProtocolError", "WireClient",
    "decode_line", "decode_pixels", "encode", "encode_pixels",
    "validate_message", "wire_schema",
]
