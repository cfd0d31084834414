"""Scaling-sweep and transfer fine-tuning harness tests on tiny budgets."""

import csv
import json

import pytest

from playhouse.agent.config import AgentConfig
from playhouse.data.dataset import BatchConfig, Dataset
from playhouse.env.config import EXTENSION_SHAPE, TRAIN_DEFAULT
from playhouse.env.probes import spawn_probe
from playhouse.oracle import generate_dataset
from playhouse.training import ablations as ablations_mod
from playhouse.training import sweep as sweep_mod
from playhouse.training import transfer as transfer_mod
from playhouse.training.ablations import (
    AblationSpec,
    modality_deficits,
    run_ablations,
)
from playhouse.training.loop import TrainSchedule, train
from playhouse.training.sweep import SweepSpec, fraction_loss_curve, run_sweep
from playhouse.training.transfer import (
    TransferSpec,
    budget_curve,
    extension_config,
    finetune_transfer,
    matching_probe_seeds,
)

TINY = TrainSchedule(steps=3, batch=BatchConfig(B=2, K=2), val_every=3,
                     val_batches=1, checkpoint_every=3, log_every=1)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    manifest = generate_dataset(root, n_episodes=12, seed=5,
                                config=TRAIN_DEFAULT, shard_size=6)
    return Dataset.load(manifest)


@pytest.fixture(scope="module")
def pretrained(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("pre")
    res = train(dataset, AgentConfig(), TINY, out)
    return res.checkpoint_best


class TestSweepSpec:
    def test_rejects_unsupported_fraction(self):
        with pytest.raises(ValueError):
            SweepSpec(fractions=(0.3, 1.0))

    def test_requires_two_points_on_some_axis(self):
        with pytest.raises(ValueError):
            SweepSpec(fractions=(1.0,), widths=(1.0,))

    def test_cell_count(self):
        spec = SweepSpec(fractions=(0.5, 1.0), widths=(1.0,), seeds=2,
                         schedule=TINY)
        assert len(list(spec.cells())) == 4


class TestRunSweep:
    def test_two_cell_sweep_reports(self, dataset, tmp_path):
        spec = SweepSpec(fractions=(0.5, 1.0), widths=(1.0,), seeds=1,
                         schedule=TINY)
        report = run_sweep(dataset, spec, tmp_path)
        assert [c["status"] for c in report["cells"]] == ["ok", "ok"]
        assert all("best_val_total" in c and "params" in c
                   for c in report["cells"])
        loaded = json.loads((tmp_path / "sweep.json").read_text())
        assert loaded == report
        with open(tmp_path / "sweep.csv") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 2
        curve = fraction_loss_curve(report)
        assert [f for f, _, _ in curve] == [0.5, 1.0]

    def test_cell_failure_recorded_and_sweep_continues(self, dataset,
                                                       tmp_path, monkeypatch):
        real_train = sweep_mod.train

        def failing(ds, cfg, sched, out, **kw):
            if sched.fraction == 0.5:
                raise RuntimeError("boom")
            return real_train(ds, cfg, sched, out, **kw)

        monkeypatch.setattr(sweep_mod, "train", failing)
        spec = SweepSpec(fractions=(0.5, 1.0), widths=(1.0,), seeds=1,
                         schedule=TINY)
        report = run_sweep(dataset, spec, tmp_path)
        by_frac = {c["fraction"]: c for c in report["cells"]}
        assert by_frac[0.5]["status"] == "failed"
        assert "boom" in by_frac[0.5]["error"]
        assert by_frac[1.0]["status"] == "ok"
        assert fraction_loss_curve(report) == [
            (1.0, by_frac[1.0]["best_val_total"], 0.0)]


class TestTransferSpec:
    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            TransferSpec(mode="new_adverb")

    def test_rejects_unsorted_budgets(self):
        with pytest.raises(ValueError):
            TransferSpec(budgets=(8, 4))

    def test_extension_config_adds_shape_once(self):
        ext = extension_config(TRAIN_DEFAULT)
        assert ext.catalog.count(EXTENSION_SHAPE) == 1
        assert extension_config(ext).catalog == ext.catalog

    def test_matching_seeds_hit_extension_shape(self):
        ext = extension_config(TRAIN_DEFAULT)
        pred = lambda t: t.target.get("shape") == EXTENSION_SHAPE
        seeds = matching_probe_seeds("lift", ext, 3, 0, pred)
        assert len(seeds) == 3
        for s in seeds:
            _, task = spawn_probe("lift", s, ext)
            assert task.target["shape"] == EXTENSION_SHAPE


class TestFinetuneTransfer:
    def test_new_verb_report(self, dataset, pretrained, tmp_path):
        spec = TransferSpec(mode="new_verb", budgets=(1, 2), base_episodes=2,
                            val_episodes=2, eval_episodes=1, schedule=TINY)
        report = finetune_transfer(dataset, pretrained, spec, tmp_path)
        arms = [(r["budget"], r["arm"]) for r in report["rows"]]
        assert arms == [(0, "pretrained"), (1, "finetuned"), (1, "scratch"),
                        (2, "finetuned"), (2, "scratch")]
        assert all(r["status"] == "ok" for r in report["rows"])
        assert all(0.0 <= r["mean_success"] <= 1.0 for r in report["rows"])
        loaded = json.loads((tmp_path / "transfer.json").read_text())
        assert loaded == report
        with open(tmp_path / "transfer.csv") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 5   # one kind per row for the clear verb
        assert budget_curve(report, "finetuned") == [
            (1, report["rows"][1]["mean_success"]),
            (2, report["rows"][3]["mean_success"])]

    def test_arm_failure_recorded(self, dataset, pretrained, tmp_path,
                                  monkeypatch):
        def boom(*a, **kw):
            raise RuntimeError("boom")

        monkeypatch.setattr(transfer_mod, "train", boom)
        spec = TransferSpec(mode="new_verb", budgets=(1,), base_episodes=1,
                            val_episodes=1, eval_episodes=1, schedule=TINY)
        report = finetune_transfer(dataset, pretrained, spec, tmp_path)
        assert report["rows"][0]["status"] == "ok"   # pre-train eval still runs
        for row in report["rows"][1:]:
            assert row["status"] == "failed"
            assert "boom" in row["error"]
        assert (tmp_path / "transfer.json").exists()


class TestAblationHarness:
    def test_rejects_unknown_ablation(self):
        with pytest.raises(ValueError):
            AblationSpec(ablations=("no_gravity",))

    def test_variant_list_includes_baseline(self):
        spec = AblationSpec(ablations=("no_hierarchy",), schedule=TINY)
        names = [n for n, _ in spec.variants()]
        assert names == ["baseline", "no_hierarchy"]

    def test_two_variant_report(self, dataset, tmp_path):
        spec = AblationSpec(ablations=("no_contrastive",),
                            eval_kinds=("go",), eval_episodes=1,
                            schedule=TINY)
        report = run_ablations(dataset, spec, tmp_path)
        assert [r["variant"] for r in report["rows"]] == \
            ["baseline", "no_contrastive"]
        assert all(r["status"] == "ok" for r in report["rows"])
        assert all("go" in r["per_kind"] for r in report["rows"])
        loaded = json.loads((tmp_path / "ablations.json").read_text())
        assert loaded == report
        with open(tmp_path / "ablations.csv") as f:
            assert len(list(csv.DictReader(f))) == 2

    def test_variant_failure_recorded(self, dataset, tmp_path, monkeypatch):
        real_train = ablations_mod.train

        def failing(ds, cfg, sched, out):
            if cfg.no_hierarchy:
                raise RuntimeError("boom")
            return real_train(ds, cfg, sched, out)

        monkeypatch.setattr(ablations_mod, "train", failing)
        spec = AblationSpec(ablations=("no_hierarchy",), eval_kinds=("go",),
                            eval_episodes=1, schedule=TINY)
        report = run_ablations(dataset, spec, tmp_path)
        by_name = {r["variant"]: r for r in report["rows"]}
        assert by_name["baseline"]["status"] == "ok"
        assert by_name["no_hierarchy"]["status"] == "failed"
        assert "boom" in by_name["no_hierarchy"]["error"]

    def test_modality_deficit_reading(self):
        report = {"rows": [
            {"variant": "baseline", "status": "ok",
             "per_kind": {"go": {"success_rate": 0.8},
                          "lift": {"success_rate": 0.6}}},
            {"variant": "no_vision", "status": "ok",
             "per_kind": {"go": {"success_rate": 0.1},
                          "lift": {"success_rate": 0.1}}},
        ]}
        d = modality_deficits(report)
        assert d == {"no_vision": pytest.approx(0.6)}
