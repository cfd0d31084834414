"""Losses (analytic values, masking, contrastive), optimization loop
(overfit, determinism, NaN abort, checkpoints), and probe evaluation."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from playhouse.agent import AgentConfig, AgentModel, AgentPolicy, \
    uniform_movement_nats
from playhouse.data.batching import BatchSource
from playhouse.data.dataset import BatchConfig
from playhouse.env.config import TRAIN_DEFAULT
from playhouse.numcore import tensor as T
from playhouse.numcore.optim import Adam
from playhouse.numcore.params import gradients
from playhouse.numcore.tensor import tape_context
from playhouse.oracle.datagen import make_tokenizer, solve_probe_episode
from playhouse.training import (TrainSchedule, bc_loss, contrastive_loss,
                                evaluate, joint_loss, load_agent,
                                run_probe_episode, save_agent, train)


@pytest.fixture(scope="module")
def tok():
    return make_tokenizer(TRAIN_DEFAULT)


@pytest.fixture(scope="module")
def episodes(tok):
    kinds = ["go", "lift", "color", "count", "exist", "position"]
    return [solve_probe_episode(kinds[i % 6], 300 + i, TRAIN_DEFAULT, tok)[1]
            for i in range(8)]


def make_batch(episodes, tok, b=4, k=4, seed=0):
    src = BatchSource(episodes[:b], tok, BatchConfig(B=b, K=k), seed=seed)
    return src.next_batch()


# ---------------------------------------------------------------------------
# loss analytics
# ---------------------------------------------------------------------------

class TestLosses:
    def test_movement_loss_uniform_at_init(self, episodes, tok):
        batch = make_batch(episodes, tok)
        model = AgentModel(AgentConfig(), seed=0)
        _, rep, _ = bc_loss(model, batch)
        got = rep.bc_movement + rep.per_head["noop"]
        assert abs(got - uniform_movement_nats()) / uniform_movement_nats() \
            < 0.01

    def test_speak_head_ln2_at_init(self, episodes, tok):
        batch = make_batch(episodes, tok)
        model = AgentModel(AgentConfig(), seed=0)
        _, rep, _ = bc_loss(model, batch)
        assert abs(rep.per_head["speak"] - math.log(2)) < 1e-5

    def test_all_noop_batch_masks_action_heads(self, episodes, tok):
        batch = dict(make_batch(episodes, tok))
        batch["mv_noop"] = np.ones_like(batch["mv_noop"])
        model = AgentModel(AgentConfig(), seed=0)
        _, rep, _ = bc_loss(model, batch)
        assert rep.bc_movement == 0.0
        assert rep.counts["active_ticks"] == 0
        assert rep.per_head["noop"] > 0.0

    def test_contrastive_2ln2_at_init(self, episodes, tok):
        batch = make_batch(episodes, tok, k=6)
        model = AgentModel(AgentConfig(), seed=0)
        loss, n_pairs = contrastive_loss(model, batch)
        assert n_pairs > 0
        assert abs(float(loss.data) - 2 * math.log(2)) < 1e-3

    def test_contrastive_all_pre_utterance(self, episodes, tok):
        batch = dict(make_batch(episodes, tok))
        batch["lang_has"] = np.zeros_like(batch["lang_has"])
        model = AgentModel(AgentConfig(), seed=0)
        loss, n_pairs = contrastive_loss(model, batch)
        assert n_pairs == 0 and float(loss.data) == 0.0

    def test_total_is_weighted_sum(self, episodes, tok):
        batch = make_batch(episodes, tok, k=6)
        model = AgentModel(AgentConfig(), seed=1)
        lam = 0.5
        _, rep, _ = joint_loss(model, batch, lambda_contrastive=lam)
        expect = rep.bc_movement + rep.bc_language + rep.bc_noop \
            + lam * rep.contrastive
        assert abs(rep.total - expect) < 1e-5
        assert rep.is_finite()

    def test_loss_report_serializes(self, episodes, tok):
        batch = make_batch(episodes, tok)
        model = AgentModel(AgentConfig(), seed=0)
        _, rep, _ = joint_loss(model, batch)
        d = json.loads(json.dumps(rep.to_dict()))
        assert d["split"] == "train"
        assert set(d["per_head"]) == set(rep.per_head)

    def test_no_contrastive_config_skips_term(self, episodes, tok):
        batch = make_batch(episodes, tok, k=6)
        model = AgentModel(AgentConfig(no_contrastive=True), seed=0)
        _, rep, _ = joint_loss(model, batch)
        assert rep.contrastive == 0.0 and rep.counts["pairs"] == 0

    def test_recurrent_state_threads_through_loss(self, episodes, tok):
        batch = make_batch(episodes, tok)
        model = AgentModel(AgentConfig(), seed=0)
        _, _, s1 = joint_loss(model, batch)
        assert any(np.any(h != 0) for h in s1.hs)

    def test_discriminator_separates_toy_pairs(self, episodes, tok):
        """Two distinct (scene, utterance) pairs are separable: the
        contrastive loss alone drives them well below chance level."""
        rng = np.random.default_rng(0)
        batch = {
            "pixels": rng.random((2, 1, 36, 48, 3)).astype(np.float32),
            "lang_obs": np.stack([
                np.full((1, 25), 5, dtype=np.int64),
                np.full((1, 25), 9, dtype=np.int64)]),
            "lang_has": np.ones((2, 1), dtype=bool),
            "step_mask": np.ones((2, 1), dtype=bool),
            "reset": np.ones(2, dtype=bool),
        }
        model = AgentModel(AgentConfig(), seed=0)
        opt = Adam(model.params, lr=3e-3)
        for _ in range(120):
            with tape_context() as tape:
                loss, n = contrastive_loss(model, batch)
                grads, _ = gradients(loss, model.params, tape)
            opt.step(grads)
        final, _ = contrastive_loss(model, batch)
        assert float(final.data) < 0.1


# ---------------------------------------------------------------------------
# optimization loop
# ---------------------------------------------------------------------------

class TestLoop:
    def test_overfit_small_set_halves_loss(self, episodes, tok):
        model = AgentModel(AgentConfig(), seed=0)
        batch = make_batch(episodes, tok, b=2, k=4, seed=3)
        opt = Adam(model.params, lr=3e-4)
        start = None
        state = model.initial_state(2)
        for step in range(200):
            with tape_context() as tape:
                loss, rep, _ = joint_loss(model, batch, None)
                grads, _ = gradients(loss, model.params, tape)
            opt.step(grads)
            if start is None:
                start = rep.total
        _, rep, _ = joint_loss(model, batch, None)
        assert rep.total < 0.5 * start, (start, rep.total)

    def test_train_writes_metrics_and_checkpoints(self, episodes, tok, tmp_path):
        sched = TrainSchedule(steps=6, batch=BatchConfig(B=2, K=2),
                              val_every=3, val_batches=1,
                              checkpoint_every=3, log_every=2, seed=0)
        res = train((episodes[:4], episodes[4:6], tok), AgentConfig(),
                    sched, tmp_path)
        assert res.aborted is None and res.steps_done == 6
        assert Path(res.checkpoint_last).exists()
        assert Path(res.checkpoint_best).exists()
        lines = [json.loads(l) for l in
                 Path(res.metrics_path).read_text().splitlines()]
        assert all({"step", "component", "value", "split"} <= set(l)
                   for l in lines)
        assert any(l["split"] == "validation" for l in lines)
        assert all(np.isfinite(l["value"]) for l in lines)

    def test_train_deterministic(self, episodes, tok, tmp_path):
        sched = TrainSchedule(steps=4, batch=BatchConfig(B=2, K=2),
                              val_every=4, val_batches=1,
                              checkpoint_every=4, log_every=1, seed=5)
        r1 = train((episodes[:4], episodes[4:6], tok), AgentConfig(),
                   sched, tmp_path / "a")
        r2 = train((episodes[:4], episodes[4:6], tok), AgentConfig(),
                   sched, tmp_path / "b")
        m1 = Path(r1.metrics_path).read_text()
        m2 = Path(r2.metrics_path).read_text()
        assert m1 == m2

    def test_nan_divergence_aborts_with_checkpoint(self, episodes, tok,
                                                   tmp_path):
        sched = TrainSchedule(steps=50, lr=1e18, grad_clip=0.0,
                              batch=BatchConfig(B=2, K=2), val_every=50,
                              val_batches=1, checkpoint_every=50,
                              log_every=1, seed=0)
        res = train((episodes[:4], episodes[4:6], tok), AgentConfig(),
                    sched, tmp_path)
        assert res.aborted is not None
        model, header = load_agent(res.checkpoint_last)
        for _, t in model.params.items():
            assert np.all(np.isfinite(t.data))

    def test_checkpoint_round_trip_is_exact(self, tmp_path):
        model = AgentModel(AgentConfig(width_multiplier=0.5), seed=3)
        path = save_agent(tmp_path / "m.ckpt", model, {"step": 17})
        loaded, header = load_agent(path)
        assert header["step"] == 17
        assert loaded.config == model.config
        a, b = model.params.state_arrays(), loaded.params.state_arrays()
        assert a.keys() == b.keys()
        for k in a:
            assert np.array_equal(a[k], b[k])


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

class TestEvaluate:
    def test_zero_episodes_empty_report(self, tok):
        model = AgentModel(AgentConfig(), seed=0)
        rep = evaluate(model, tok, kinds=("go",), n_episodes=0, seed=0)
        assert rep.per_kind == {}

    def test_report_fields_and_round_trip(self, tok):
        model = AgentModel(AgentConfig(), seed=0)
        rep = evaluate(model, tok, kinds=("go",), n_episodes=2, seed=50,
                       checkpoint_id="ck")
        cell = rep.per_kind["go"]
        assert 0.0 <= cell["success_rate"] <= 1.0 and cell["n"] == 2
        from playhouse.training import EvalReport
        again = EvalReport.from_dict(json.loads(
            json.dumps(rep.to_dict())))
        assert again.per_kind == rep.per_kind

    def test_unknown_kind_rejected(self, tok):
        model = AgentModel(AgentConfig(), seed=0)
        with pytest.raises(ValueError):
            evaluate(model, tok, kinds=("swim",), n_episodes=1)

    def test_rollout_records_full_episode(self, tok):
        model = AgentModel(AgentConfig(), seed=0)
        task, episode, ok = run_probe_episode(model, tok, "go", 77)
        assert episode.T == task.time_limit
        assert episode.meta.source == "agent"
        assert episode.utterances[0].role == "setter"
        assert isinstance(ok, bool)

    def test_acting_never_touches_discriminator(self, tok):
        model = AgentModel(AgentConfig(), seed=0)
        called = []
        orig = model.discriminate
        model.discriminate = lambda *a, **k: called.append(1) or orig(*a, **k)
        run_probe_episode(model, tok, "go", 78)
        assert called == []

    def test_loss_path_has_no_probe_import(self):
        import playhouse.training.losses as losses
        import playhouse.training.loop as loop
        for mod in (losses, loop):
            src = Path(mod.__file__).read_text()
            assert "probes" not in src, mod.__name__
            assert not hasattr(mod, "evaluate_probe")
