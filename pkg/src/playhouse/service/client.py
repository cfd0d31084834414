"""Minimal scripted wire client: speaks the session protocol over TCP for
tests, tooling, and headless interaction runs."""

from __future__ import annotations

import socket

from . import protocol as wire


class WireClient:
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self._buf = b""

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def send(self, msg: dict) -> None:
        self.sock.sendall(wire.encode(msg))

    def send_raw(self, data: bytes) -> None:
        """Unvalidated bytes, for protocol-robustness tests."""
        self.sock.sendall(data)

    def recv(self) -> dict:
        """Next message; raises ConnectionError on EOF."""
        while b"\n" not in self._buf:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("server closed the connection")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return wire.decode_line(line)

    def recv_until(self, msg_type: str, limit: int = 100_000) -> tuple[dict, list[dict]]:
        """Read until a message of msg_type arrives; returns (it, everything
        read including it, in order)."""
        seen = []
        for _ in range(limit):
            msg = self.recv()
            seen.append(msg)
            if msg["type"] == msg_type:
                return msg, seen
        raise TimeoutError(f"no {msg_type!r} within {limit} messages")
