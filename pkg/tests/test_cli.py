"""Command-line interface tests: each subcommand end-to-end on tiny inputs."""

import json
import socket
import threading

import pytest

from playhouse.cli import main
from playhouse.data.dataset import Dataset
from playhouse.service.client import WireClient


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli-data")
    assert main(["generate-data", "--out", str(d), "--episodes", "12",
                 "--seed", "3", "--shard-size", "6"]) == 0
    return d


@pytest.fixture(scope="module")
def trained(data_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-train")
    rc = main(["train", "--data", str(data_dir / "manifest.json"),
               "--out", str(out), "--steps", "3", "--batch-size", "2",
               "--windows", "2", "--val-every", "3", "--checkpoint-every", "3",
               "--log-every", "1"])
    assert rc == 0
    return out


class TestGenerateData:
    def test_manifest_and_mix(self, data_dir):
        ds = Dataset.load(data_dir / "manifest.json")
        assert len(ds) == 12

    def test_unknown_kind_rejected(self, tmp_path, capsys):
        rc = main(["generate-data", "--out", str(tmp_path), "--episodes", "1",
                   "--kinds", "go,fly"])
        assert rc == 2
        assert "fly" in capsys.readouterr().err


class TestTrain:
    def test_writes_checkpoints_and_metrics(self, trained):
        assert (trained / "best.ckpt").exists()
        assert (trained / "last.ckpt").exists()
        lines = (trained / "metrics.jsonl").read_text().splitlines()
        rows = [json.loads(l) for l in lines]
        assert all({"step", "component", "value"} <= set(r) for r in rows)

    def test_config_file_defaults_with_flag_override(self, data_dir,
                                                     tmp_path):
        cfg = tmp_path / "train.json"
        cfg.write_text(json.dumps({"steps": 1, "batch-size": 2,
                                   "windows": 2, "val-every": 1,
                                   "checkpoint-every": 1, "log-every": 1}))
        out = tmp_path / "run"
        rc = main(["train", "--data", str(data_dir / "manifest.json"),
                   "--out", str(out), "--config", str(cfg), "--steps", "2"])
        assert rc == 0
        rows = [json.loads(l) for l in
                (out / "metrics.jsonl").read_text().splitlines()]
        assert max(r["step"] for r in rows) == 2  # flag beat the file

    def test_unknown_config_key_rejected(self, data_dir, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"stepz": 1}))
        rc = main(["train", "--data", str(data_dir / "manifest.json"),
                   "--out", str(tmp_path / "x"), "--config", str(cfg)])
        assert rc == 2
        assert "stepz" in capsys.readouterr().err


class TestEval:
    def test_report_written(self, data_dir, trained, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        rc = main(["eval", "--checkpoint", str(trained / "best.ckpt"),
                   "--data", str(data_dir / "manifest.json"),
                   "--kinds", "go", "--episodes", "2",
                   "--out", str(report_path)])
        assert rc == 0
        saved = json.loads(report_path.read_text())
        assert saved["report"]["per_kind"]["go"]["n"] == 2


class TestSweepCli:
    def test_two_cell_sweep(self, data_dir, tmp_path):
        rc = main(["sweep", "--data", str(data_dir / "manifest.json"),
                   "--out", str(tmp_path), "--fractions", "0.5,1.0",
                   "--sweep-seeds", "1", "--steps", "2", "--batch-size", "2",
                   "--windows", "2", "--val-every", "2",
                   "--checkpoint-every", "2", "--log-every", "1"])
        assert rc == 0
        report = json.loads((tmp_path / "sweep.json").read_text())
        assert len(report["cells"]) == 2
        assert (tmp_path / "sweep.csv").exists()


class TestTransferCli:
    def test_new_verb_tiny(self, data_dir, trained, tmp_path):
        rc = main(["transfer", "--data", str(data_dir / "manifest.json"),
                   "--checkpoint", str(trained / "best.ckpt"),
                   "--out", str(tmp_path), "--mode", "new_verb",
                   "--budgets", "1", "--base-episodes", "1",
                   "--eval-episodes", "1", "--steps", "2",
                   "--batch-size", "2", "--windows", "2", "--val-every", "2",
                   "--checkpoint-every", "2", "--log-every", "1"])
        assert rc == 0
        report = json.loads((tmp_path / "transfer.json").read_text())
        assert [r["arm"] for r in report["rows"]] == \
            ["pretrained", "finetuned", "scratch"]


class TestServeCli:
    def test_serves_and_answers_hello(self, trained, tmp_path):
        port = _free_port()
        t = threading.Thread(
            target=main,
            args=(["serve", "--checkpoint", str(trained / "best.ckpt"),
                   "--record-dir", str(tmp_path), "--port", str(port),
                   "--pace-hz", "0"],),
            daemon=True)
        t.start()
        hello = None
        for _ in range(100):
            try:
                with WireClient("127.0.0.1", port, timeout=2.0) as c:
                    c.send({"type": "hello"})
                    hello = c.recv()
                break
            except (ConnectionRefusedError, OSError):
                import time
                time.sleep(0.05)
        assert hello is not None
        assert "best" in hello["checkpoints"]

    def test_missing_checkpoint_fails_fast(self, tmp_path, capsys):
        rc = main(["serve", "--checkpoint", str(tmp_path / "none.ckpt"),
                   "--record-dir", str(tmp_path)])
        assert rc == 2


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]
