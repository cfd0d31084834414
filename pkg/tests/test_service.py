"""Wire protocol and live session server tests (scripted client)."""

import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from playhouse.agent.config import AgentConfig
from playhouse.agent.model import AgentModel
from playhouse.data.dataset import BatchConfig
from playhouse.data.episodes import ShardReader, sticky_language
from playhouse.env.config import TRAIN_DEFAULT
from playhouse.oracle.datagen import make_tokenizer
from playhouse.service import protocol as wire
from playhouse.service.client import WireClient
from playhouse.service.protocol import ProtocolError
from playhouse.service.server import InteractServer
from playhouse.training.checkpoints import save_agent
from playhouse.training.loop import TrainSchedule, train

sys.path.insert(0, str(Path(__file__).parent.parent))

GOOD_MESSAGES = [
    {"type": "hello"},
    {"type": "hello", "version": 1, "checkpoints": ["tiny"]},
    {"type": "start", "checkpoint": "tiny"},
    {"type": "start", "checkpoint": "tiny", "seed": 3, "episode_seconds": 1.5},
    {"type": "frame", "tick": 0, "pixels": "AAAA", "height": 1, "width": 1},
    {"type": "setter_text", "text": "lift the red duck"},
    {"type": "rate", "success": True},
    {"type": "rate", "success": False, "recorded": "x.rec"},
    {"type": "end", "reason": "time_limit"},
    {"type": "error", "code": "bad_json", "detail": "boom"},
]

BAD_MESSAGES = [
    ({"type": "teleport"}, wire.UNKNOWN_TYPE),
    ({"no_type": 1}, wire.INVALID_MESSAGE),
    ({"type": "start"}, wire.INVALID_MESSAGE),            # checkpoint missing
    ({"type": "setter_text", "text": ""}, wire.INVALID_MESSAGE),
    ({"type": "rate"}, wire.INVALID_MESSAGE),             # success missing
    ({"type": "frame", "tick": -1, "pixels": "", "height": 1, "width": 1},
     wire.INVALID_MESSAGE),
    ({"type": "hello", "version": 1, "extra": True}, wire.INVALID_MESSAGE),
]


class TestProtocol:
    def test_schema_is_valid_draft7(self):
        jsonschema.Draft7Validator.check_schema(wire.wire_schema())

    @pytest.mark.parametrize("msg", GOOD_MESSAGES)
    def test_good_messages_round_trip(self, msg):
        assert wire.decode_line(wire.encode(msg)) == msg

    @pytest.mark.parametrize("msg,code", BAD_MESSAGES)
    def test_bad_messages_rejected(self, msg, code):
        with pytest.raises(ProtocolError) as e:
            wire.validate_message(msg)
        assert e.value.code == code

    def test_bad_json_rejected(self):
        with pytest.raises(ProtocolError) as e:
            wire.decode_line(b"{not json")
        assert e.value.code == wire.BAD_JSON

    def test_pixels_round_trip(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(9, 12, 3), dtype=np.uint8)
        out = wire.decode_pixels(wire.encode_pixels(img), 9, 12)
        assert np.array_equal(out, img)

    def test_pixel_size_mismatch_rejected(self):
        with pytest.raises(ProtocolError):
            wire.decode_pixels(wire.encode_pixels(np.zeros((2, 2, 3),
                                                           np.uint8)), 3, 3)


@pytest.fixture(scope="module")
def checkpoint_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("ckpts")
    model = AgentModel(AgentConfig(), seed=0)
    save_agent(d / "tiny.ckpt", model, {})
    make_tokenizer(TRAIN_DEFAULT).save(d / "tokenizer.json")
    return d


@pytest.fixture()
def server(checkpoint_dir, tmp_path):
    with InteractServer(checkpoint_dir, tmp_path / "rec") as srv:
        yield srv


def start_session(server, **start_fields):
    host, port = server.address
    c = WireClient(host, port)
    c.send({"type": "hello"})
    hello = c.recv()
    assert hello["type"] == "hello"
    c.send({"type": "start", "checkpoint": "tiny", **start_fields})
    return c, hello


class TestSession:
    def test_hello_lists_checkpoints(self, server):
        host, port = server.address
        with WireClient(host, port) as c:
            c.send({"type": "hello"})
            hello = c.recv()
        assert hello["version"] == wire.PROTOCOL_VERSION
        assert "tiny" in hello["checkpoints"]

    def test_unknown_checkpoint_rejected(self, server):
        host, port = server.address
        with WireClient(host, port) as c:
            c.send({"type": "start", "checkpoint": "nope"})
            msg = c.recv()
        assert msg == {"type": "error", "code": wire.NO_SUCH_CHECKPOINT,
                       "detail": msg["detail"]}

    def test_malformed_line_gets_error_and_connection_survives(self, server):
        host, port = server.address
        with WireClient(host, port) as c:
            c.send_raw(b"{broken\n")
            assert c.recv()["code"] == wire.BAD_JSON
            c.send_raw(b'{"type": "teleport"}\n')
            assert c.recv()["code"] == wire.UNKNOWN_TYPE
            c.send({"type": "hello"})
            assert c.recv()["type"] == "hello"

    def test_full_session_records_rated_episode(self, server):
        c, _ = start_session(server, seed=11, episode_seconds=2.0)
        with c:
            end, seen = c.recv_until("end")
            frames = [m for m in seen if m["type"] == "frame"]
            assert frames, "no frames streamed"
            assert end["reason"] == "time_limit"
            f0 = frames[0]
            img = wire.decode_pixels(f0["pixels"], f0["height"], f0["width"])
            assert img.shape == (TRAIN_DEFAULT.raster_height,
                                 TRAIN_DEFAULT.raster_width, 3)
            ticks = [m["tick"] for m in frames]
            assert ticks == sorted(ticks)
            c.send({"type": "rate", "success": True})
            ack = c.recv()
        assert ack["type"] == "rate" and ack["success"] is True
        reader = ShardReader(ack["recorded"].removesuffix(".rec"))
        ep = reader.read(0)
        assert ep.meta.source == "human"
        assert ep.meta.extra["rating"] == "success"
        assert ep.meta.world_seed == 11
        assert ep.T == int(2.0 * 15)
        assert server.summary()["success_rate"] == 1.0

    def test_setter_texts_recorded_in_order_last_sticky(self, server):
        server.pace_hz = 60.0
        c, _ = start_session(server, seed=3, episode_seconds=4.0)
        texts = [f"go to the duck number {i}" for i in range(10)]
        with c:
            for t in texts:
                c.send({"type": "setter_text", "text": t})
            c.recv_until("end")
            c.send({"type": "rate", "success": False})
            ack = c.recv()
        reader = ShardReader(ack["recorded"].removesuffix(".rec"))
        ep = reader.read(0)
        setter = [e for e in ep.utterances if e.role == "setter"]
        assert [e.text for e in setter] == texts
        assert sticky_language(ep)[-1] == texts[-1]

    def test_double_rating_rejected(self, server):
        c, _ = start_session(server, seed=5, episode_seconds=1.0)
        with c:
            c.recv_until("end")
            c.send({"type": "rate", "success": True})
            assert c.recv()["type"] == "rate"
            c.send({"type": "rate", "success": False})
            assert c.recv()["code"] == wire.ALREADY_RATED

    def test_rate_before_start_rejected(self, server):
        host, port = server.address
        with WireClient(host, port) as c:
            c.send({"type": "rate", "success": True})
            assert c.recv()["code"] == wire.NOT_ENDED

    def test_setter_text_without_session_rejected(self, server):
        host, port = server.address
        with WireClient(host, port) as c:
            c.send({"type": "setter_text", "text": "hi"})
            assert c.recv()["code"] == wire.NO_SESSION

    def test_unrated_disconnect_recorded_unset(self, server, tmp_path):
        c, _ = start_session(server, seed=9, episode_seconds=1.0)
        with c:
            c.recv_until("end")
        # disconnect without rating; wait for the server to finalize
        sessions = []
        path = server.record_dir / "sessions.json"
        for _ in range(200):
            if path.exists():
                sessions = json.loads(path.read_text())["sessions"]
                if sessions:
                    break
            time.sleep(0.02)
        assert sessions[-1]["rating"] == "unset"
        assert server.summary()["rated"] == 0
        reader = ShardReader(sessions[-1]["recorded"].removesuffix(".rec"))
        assert reader.read(0).meta.extra["rating"] == "unset"

    def test_two_sessions_are_independent(self, server):
        c1, _ = start_session(server, seed=1, episode_seconds=1.0)
        c2, _ = start_session(server, seed=2, episode_seconds=1.0)
        with c1, c2:
            c1.recv_until("end")
            c2.recv_until("end")
            c1.send({"type": "rate", "success": True})
            c2.send({"type": "rate", "success": False})
            r1, r2 = c1.recv(), c2.recv()
        e1 = ShardReader(r1["recorded"].removesuffix(".rec")).read(0)
        e2 = ShardReader(r2["recorded"].removesuffix(".rec")).read(0)
        assert e1.meta.world_seed == 1 and e2.meta.world_seed == 2
        assert server.summary() == {"sessions": 2, "rated": 2,
                                    "successes": 1, "success_rate": 0.5}

    def test_recorded_session_feeds_fine_tuning(self, server, checkpoint_dir,
                                                tmp_path):
        c, _ = start_session(server, seed=21, episode_seconds=2.0)
        with c:
            c.send({"type": "setter_text", "text": "lift the red duck"})
            c.recv_until("end")
            c.send({"type": "rate", "success": True})
            ack = c.recv()
        ep = ShardReader(ack["recorded"].removesuffix(".rec")).read(0)
        tok = make_tokenizer(TRAIN_DEFAULT)
        sched = TrainSchedule(steps=2, batch=BatchConfig(B=2, K=2),
                              val_every=2, val_batches=1,
                              checkpoint_every=2, log_every=1)
        res = train(([ep, ep], [ep], tok), AgentConfig(), sched,
                    tmp_path / "ft")
        assert res.steps_done == 2
        assert np.isfinite(res.final_train_total)


class TestGoldenTranscript:
    GOLDEN = Path(__file__).parent / "golden" / "wire_transcript.json"

    @pytest.fixture()
    def golden(self):
        return json.loads(self.GOLDEN.read_text())

    def test_every_golden_message_matches_schema(self, golden):
        for msg in golden["client_script"] + golden["server_messages"]:
            wire.validate_message(msg)

    def test_live_session_reproduces_golden_transcript(self, golden,
                                                       tmp_path):
        ckpt_dir = tmp_path / "ckpts"
        ckpt_dir.mkdir()
        save_agent(ckpt_dir / "golden.ckpt",
                   AgentModel(AgentConfig(), seed=0), {})
        make_tokenizer(TRAIN_DEFAULT).save(ckpt_dir / "tokenizer.json")
        from tools.record_golden_transcript import run_session
        live = run_session(ckpt_dir, tmp_path / "rec")
        assert live == golden["server_messages"]
