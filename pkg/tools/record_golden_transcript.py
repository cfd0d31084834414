"""Record the golden wire transcript used by the protocol conformance test.

Runs a deterministic scripted session (fixed agent seed, fixed world seed,
no mid-episode input) against a local server and writes every server
message, normalized, to tests/golden/wire_transcript.json.
"""

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from playhouse.agent.config import AgentConfig
from playhouse.agent.model import AgentModel
from playhouse.env.config import TRAIN_DEFAULT
from playhouse.oracle.datagen import make_tokenizer
from playhouse.service.client import WireClient
from playhouse.service.server import InteractServer
from playhouse.training.checkpoints import save_agent

GOLDEN = REPO / "tests" / "golden" / "wire_transcript.json"
SETTER_TEXTS = [
    {"type": "setter_text", "text": "go to the red duck"},
    {"type": "setter_text", "text": "lift the blue book"},
    {"type": "setter_text", "text": "what color is the sofa"},
]
SCRIPT = [
    {"type": "hello"},
    {"type": "start", "checkpoint": "golden", "seed": 4,
     "episode_seconds": 2.0},
    *SETTER_TEXTS,
    {"type": "rate", "success": True},
]


def normalize(msg: dict) -> dict:
    out = dict(msg)
    if out.get("type") == "rate" and "recorded" in out:
        out["recorded"] = "<recorded>"
    return out


def run_session(ckpt_dir, record_dir) -> list[dict]:
    received = []
    with InteractServer(ckpt_dir, record_dir) as srv:
        host, port = srv.address
        with WireClient(host, port) as c:
            c.send(SCRIPT[0])
            received.append(c.recv())                    # hello
            c.send(SCRIPT[1])
            # one setter utterance after each of the first frames, so the
            # transcript exercises mid-episode language input
            pending = list(SETTER_TEXTS)
            while True:                                  # frames + end
                msg = c.recv()
                received.append(msg)
                if msg["type"] == "frame" and pending:
                    c.send(pending.pop(0))
                if msg["type"] == "end":
                    break
            c.send(SCRIPT[-1])
            received.append(c.recv())                    # rate ack
    return [normalize(m) for m in received]


def main():
    with tempfile.TemporaryDirectory() as tmp:
        ckpt_dir = Path(tmp) / "ckpts"
        ckpt_dir.mkdir()
        save_agent(ckpt_dir / "golden.ckpt", AgentModel(AgentConfig(), seed=0),
                   {})
        make_tokenizer(TRAIN_DEFAULT).save(ckpt_dir / "tokenizer.json")
        transcript = run_session(ckpt_dir, Path(tmp) / "rec")
    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_text(json.dumps(
        {"version": 1, "client_script": SCRIPT, "server_messages": transcript},
        indent=1))
    print(f"wrote {GOLDEN} ({len(transcript)} server messages)")


if __name__ == "__main__":
    main()
