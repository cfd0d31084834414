"""Session server for live human-setter interaction: hosts one environment
and agent per connection, streams frames over the wire protocol, applies
setter utterances as the agent's sticky language observation, and records
rated sessions as episode shards usable for fine-tuning."""

from __future__ import annotations

import json
import select
import socket
import socketserver
import threading
import time
from pathlib import Path

import numpy as np

from ..actions import LanguageAction
from ..agent.policy import AgentPolicy
from ..data.episodes import (Episode, EpisodeMeta, EpisodeStep, ShardWriter,
                             UtteranceEvent)
from ..data.tokenizer import Tokenizer
from ..env import config as envcfg
from ..env.config import TICK_HZ
from ..env.render import render
from ..env.world import generate_world, step_inplace
from ..oracle.datagen import make_tokenizer
from ..training.checkpoints import load_agent
from . import protocol as wire
from .protocol import ProtocolError

DEFAULT_EPISODE_SECONDS = 30.0


class _Closed(Exception):
    """Peer disconnected."""


class _LineChannel:
    """Newline-delimited message framing over a socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buf = b""

    def send(self, msg: dict) -> None:
        self.sock.sendall(wire.encode(msg))

    def _fill(self, timeout) -> bool:
        """Read one chunk if available within timeout; False on timeout."""
        ready, _, _ = select.select([self.sock], [], [], timeout)
        if not ready:
            return False
        chunk = self.sock.recv(65536)
        if not chunk:
            raise _Closed
        self.buf += chunk
        return True

    def poll_line(self, timeout: float = 0.0) -> bytes | None:
        """Next complete line, or None if none arrives within timeout."""
        deadline = time.monotonic() + timeout
        while b"\n" not in self.buf:
            remaining = max(0.0, deadline - time.monotonic())
            if not self._fill(remaining) and b"\n" not in self.buf:
                return None
        line, self.buf = self.buf.split(b"\n", 1)
        return line

    def read_line(self) -> bytes:
        """Block until a complete line arrives; raises _Closed on EOF."""
        while b"\n" not in self.buf:
            self._fill(None)
        line, self.buf = self.buf.split(b"\n", 1)
        return line


class InteractServer:
    """TCP session server. One session per connection; sessions are
    independent (own world, own agent state, shared read-only parameters)."""

    def __init__(self, checkpoint_dir, record_dir, host: str = "127.0.0.1",
                 port: int = 0, episode_seconds: float = DEFAULT_EPISODE_SECONDS,
                 pace_hz: float = 0.0,
                 env_config: envcfg.EnvConfig | None = None):
        self.checkpoint_dir = Path(checkpoint_dir)
        self.record_dir = Path(record_dir)
        self.record_dir.mkdir(parents=True, exist_ok=True)
        self.host, self.port = host, port
        self.episode_seconds = episode_seconds
        self.pace_hz = pace_hz  # 0 = step as fast as possible
        self.config = env_config or envcfg.TRAIN_DEFAULT
        tok_path = self.checkpoint_dir / "tokenizer.json"
        self.tokenizer = Tokenizer.load(tok_path) if tok_path.exists() \
            else make_tokenizer(self.config)
        self._models: dict[str, object] = {}
        self._lock = threading.Lock()
        self._sessions: list[dict] = []
        self._session_counter = 0
        self._server: socketserver.ThreadingTCPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> tuple[str, int]:
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                outer._handle_connection(self.request)

        self._server = socketserver.ThreadingTCPServer(
            (self.host, self.port), Handler, bind_and_activate=True)
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)
        self._thread.start()
        return self.address

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    # -- checkpoint registry --------------------------------------------------

    def checkpoint_ids(self) -> list[str]:
        return sorted(p.stem for p in self.checkpoint_dir.glob("*.ckpt"))

    def _model(self, checkpoint_id: str):
        with self._lock:
            if checkpoint_id not in self._models:
                path = self.checkpoint_dir / f"{checkpoint_id}.ckpt"
                if not path.exists():
                    raise ProtocolError(wire.NO_SUCH_CHECKPOINT,
                                        f"no checkpoint {checkpoint_id!r}")
                self._models[checkpoint_id], _ = load_agent(path)
            return self._models[checkpoint_id]

    # -- aggregate reporting ----------------------------------------------------

    def summary(self) -> dict:
        """Success rate over rated sessions only."""
        with self._lock:
            sessions = list(self._sessions)
        rated = [s for s in sessions if s["rating"] in ("success", "failure")]
        wins = sum(s["rating"] == "success" for s in rated)
        return {"sessions": len(sessions), "rated": len(rated),
                "successes": wins,
                "success_rate": wins / len(rated) if rated else None}

    def _finalize(self, record: dict) -> None:
        with self._lock:
            self._sessions.append(record)
        (self.record_dir / "sessions.json").write_text(
            json.dumps({"sessions": self._sessions,
                        "summary": self.summary()}, indent=1))

    # -- per-connection session --------------------------------------------------

    def _handle_connection(self, sock: socket.socket) -> None:
        chan = _LineChannel(sock)
        session = None
        try:
            while True:
                line = chan.read_line()
                try:
                    msg = wire.decode_line(line)
                except ProtocolError as exc:
                    chan.send({"type": "error", "code": exc.code,
                               "detail": exc.detail})
                    continue
                mtype = msg["type"]
                if mtype == "hello":
                    chan.send({"type": "hello",
                               "version": wire.PROTOCOL_VERSION,
                               "checkpoints": self.checkpoint_ids()})
                elif mtype == "start":
                    if session is not None:
                        chan.send({"type": "error",
                                   "code": wire.SESSION_ACTIVE,
                                   "detail": "session already started"})
                        continue
                    try:
                        model = self._model(msg["checkpoint"])
                    except ProtocolError as exc:
                        chan.send({"type": "error", "code": exc.code,
                                   "detail": exc.detail})
                        continue
                    session = self._run_episode(chan, model, msg)
                elif mtype == "setter_text":
                    chan.send({"type": "error", "code": wire.NO_SESSION,
                               "detail": "no active session"})
                elif mtype == "rate":
                    if session is None:
                        chan.send({"type": "error", "code": wire.NOT_ENDED,
                                   "detail": "no episode to rate"})
                    elif session["rating"] != "unset":
                        chan.send({"type": "error",
                                   "code": wire.ALREADY_RATED,
                                   "detail": "rating already recorded"})
                    else:
                        session["rating"] = "success" if msg["success"] \
                            else "failure"
                        path = self._record(session)
                        chan.send({"type": "rate", "success": msg["success"],
                                   "recorded": str(path)})
                elif mtype == "end":
                    if session is None:
                        chan.send({"type": "error", "code": wire.NO_SESSION,
                                   "detail": "no active session"})
                    # after the episode: nothing to do, already ended
                elif mtype == "frame":
                    chan.send({"type": "error", "code": wire.INVALID_MESSAGE,
                               "detail": "frame is a server message"})
        except (_Closed, ConnectionError, OSError):
            pass
        finally:
            if session is not None and session["rating"] == "unset" \
                    and not session["recorded"]:
                self._record(session)

    def _run_episode(self, chan: _LineChannel, model, start_msg: dict) -> dict:
        """Step the world and agent to the time limit, streaming frames and
        applying setter text; returns the session record buffers."""
        seed = int(start_msg.get("seed", int(time.time_ns()) % 2**31))
        seconds = float(start_msg.get("episode_seconds",
                                      self.episode_seconds))
        ticks = min(int(round(seconds * TICK_HZ)), self.config.episode_ticks)
        world = generate_world(seed, self.config)
        policy = AgentPolicy(model)
        period = model.config.effective_period
        interval = 1.0 / self.pace_hz if self.pace_hz > 0 else 0.0

        with self._lock:
            self._session_counter += 1
            sid = self._session_counter
        steps: list[EpisodeStep] = []
        events: list[UtteranceEvent] = []
        sticky = ""
        reason = "time_limit"
        for t in range(ticks):
            # drain any client messages that arrived since the last tick
            while True:
                line = chan.poll_line(0.0)
                if line is None:
                    break
                try:
                    msg = wire.decode_line(line)
                except ProtocolError as exc:
                    chan.send({"type": "error", "code": exc.code,
                               "detail": exc.detail})
                    continue
                if msg["type"] == "setter_text":
                    sticky = msg["text"]
                    events.append(UtteranceEvent(tick=t, role="setter",
                                                 text=sticky))
                elif msg["type"] == "end":
                    reason = "client_end"
                elif msg["type"] == "hello":
                    chan.send({"type": "hello",
                               "version": wire.PROTOCOL_VERSION,
                               "checkpoints": self.checkpoint_ids()})
                elif msg["type"] == "rate":
                    chan.send({"type": "error", "code": wire.NOT_ENDED,
                               "detail": "episode still running"})
                else:
                    chan.send({"type": "error", "code": wire.SESSION_ACTIVE,
                               "detail": "session already started"})
            if reason == "client_end":
                break

            observe = policy.tick % period == 0
            pixels = render(world) if observe else None
            tokens = self.tokenizer.tokenize(sticky)[:model.config.max_tokens] \
                if sticky else []
            action, utterance = policy.step(pixels, tokens)
            language = LanguageAction()
            agent_text = None
            if utterance:
                agent_text = self.tokenizer.detokenize(utterance)
                language = LanguageAction(noop=False, tokens=tuple(utterance))
                events.append(UtteranceEvent(tick=t, role="solver",
                                             text=agent_text))
            steps.append(EpisodeStep(movement=action, language=language))
            step_inplace(world, action)
            if observe:
                frame = {"type": "frame", "tick": t,
                         "pixels": wire.encode_pixels(pixels),
                         "height": int(pixels.shape[0]),
                         "width": int(pixels.shape[1])}
                if agent_text is not None:
                    frame["agent_utterance"] = agent_text
                chan.send(frame)
            if interval:
                time.sleep(interval)
        chan.send({"type": "end", "reason": reason})
        return {"id": sid, "seed": seed, "checkpoint": start_msg["checkpoint"],
                "steps": steps, "events": events, "rating": "unset",
                "recorded": ""}

    def _record(self, session: dict) -> Path:
        meta = EpisodeMeta(world_seed=session["seed"],
                           config_text=envcfg.dumps(self.config),
                           source="human",
                           roles="setter:human,solver:agent",
                           extra={"rating": session["rating"],
                                  "checkpoint": session["checkpoint"]})
        episode = Episode(meta=meta, steps=session["steps"],
                          utterances=session["events"])
        base = self.record_dir / f"session-{session['id']:04d}"
        with ShardWriter(base) as w:
            w.append(episode)
        session["recorded"] = str(base) + ".rec"
        self._finalize({k: session[k] for k in
                        ("id", "seed", "checkpoint", "rating", "recorded")})
        return Path(session["recorded"])
