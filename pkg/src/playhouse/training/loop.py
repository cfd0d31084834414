"""Optimization loop: joint loss over streamed minibatches, periodic
validation, checkpointing with best-validation tracking, append-only
JSON-lines metrics, and NaN abort with the last good checkpoint retained."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agent.config import AgentConfig
from ..agent.model import AgentModel
from ..data.batching import BatchSource
from ..data.dataset import BatchConfig, Dataset
from ..numcore.optim import Adam
from ..numcore.params import gradients
from ..numcore.tensor import tape_context
from .checkpoints import save_agent
from .losses import LAMBDA_CONTRASTIVE, LossReport, joint_loss


@dataclass
class TrainSchedule:
    steps: int = 2000
    lr: float = 3e-4
    grad_clip: float = 1.0
    batch: BatchConfig = field(default_factory=BatchConfig)
    lambda_contrastive: float = LAMBDA_CONTRASTIVE
    val_every: int = 200
    val_batches: int = 4
    checkpoint_every: int = 500
    log_every: int = 20
    seed: int = 0
    fraction: float = 1.0


@dataclass
class TrainResult:
    steps_done: int
    best_val_total: float
    best_val_step: int
    final_train_total: float
    checkpoint_last: str
    checkpoint_best: str
    metrics_path: str
    aborted: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def _emit(fh, step: int, report: LossReport) -> None:
    rows = [("total", report.total), ("bc_movement", report.bc_movement),
            ("bc_language", report.bc_language), ("bc_noop", report.bc_noop),
            ("contrastive", report.contrastive)]
    rows += sorted(report.per_head.items())
    for component, value in rows:
        fh.write(json.dumps({"step": step, "component": component,
                             "value": value, "split": report.split}) + "\n")
    fh.flush()


def _validate(model, val_episodes, tokenizer, schedule) -> LossReport:
    src = BatchSource(val_episodes, tokenizer, schedule.batch,
                      seed=schedule.seed + 7919,
                      period=model.config.effective_period)
    state = model.initial_state(schedule.batch.B)
    agg: dict[str, float] = {}
    heads: dict[str, float] = {}
    n = 0
    for _ in range(schedule.val_batches):
        batch = src.next_batch()
        _, rep, state = joint_loss(model, batch, state,
                                   schedule.lambda_contrastive,
                                   split="validation")
        for key in ("total", "bc_movement", "bc_language", "bc_noop",
                    "contrastive"):
            agg[key] = agg.get(key, 0.0) + getattr(rep, key)
        for h, v in rep.per_head.items():
            heads[h] = heads.get(h, 0.0) + v
        n += 1
    return LossReport(
        total=agg["total"] / n, bc_movement=agg["bc_movement"] / n,
        bc_language=agg["bc_language"] / n, bc_noop=agg["bc_noop"] / n,
        contrastive=agg["contrastive"] / n,
        per_head={h: v / n for h, v in heads.items()},
        counts={"batches": n}, split="validation")


def train(dataset: Dataset | tuple, agent_config: AgentConfig,
          schedule: TrainSchedule, out_dir,
          model: AgentModel | None = None) -> TrainResult:
    """Optimize the joint objective. ``dataset`` is a Dataset (train/
    validation splits used) or an explicit (train_episodes, val_episodes,
    tokenizer) triple. Deterministic given (dataset, config, schedule)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(dataset, Dataset):
        tokenizer = dataset.tokenizer
        train_eps = dataset.episodes("train", schedule.fraction)
        val_eps = dataset.episodes("validation")
    else:
        train_eps, val_eps, tokenizer = dataset

    if model is None:
        model = AgentModel(agent_config, seed=schedule.seed)
    src = BatchSource(train_eps, tokenizer, schedule.batch,
                      seed=schedule.seed,
                      period=model.config.effective_period)
    opt = Adam(model.params, lr=schedule.lr)
    state = model.initial_state(schedule.batch.B)

    last_path = out / "last.ckpt"
    best_path = out / "best.ckpt"
    metrics_path = out / "metrics.jsonl"
    best_val, best_step = float("inf"), -1
    final_train = float("nan")
    aborted = None

    step = 0
    with open(metrics_path, "a") as mf:
        save_agent(last_path, model, {"step": 0})
        for step in range(1, schedule.steps + 1):
            batch = src.next_batch()
            with tape_context() as tape:
                loss, report, state = joint_loss(
                    model, batch, state, schedule.lambda_contrastive)
                grads, _ = gradients(loss, model.params, tape)
            if not report.is_finite():
                aborted = f"non-finite loss at step {step}"
                break
            clip_global_norm(grads, schedule.grad_clip)
            opt.step(grads)
            final_train = report.total
            if step % schedule.log_every == 0 or step == schedule.steps:
                _emit(mf, step, report)
            if step % schedule.val_every == 0 or step == schedule.steps:
                val = _validate(model, val_eps, tokenizer, schedule)
                _emit(mf, step, val)
                if val.total < best_val:
                    best_val, best_step = val.total, step
                    save_agent(best_path, model,
                               {"step": step, "val_total": val.total})
            if step % schedule.checkpoint_every == 0 or step == schedule.steps:
                save_agent(last_path, model, {"step": step})
        steps_done = step if aborted is None else step - 1

    if not best_path.exists():
        if aborted is None:
            save_agent(best_path, model, {"step": steps_done})
        else:
            # keep only known-good parameters around after a divergence
            best_path.write_bytes(last_path.read_bytes())
    return TrainResult(
        steps_done=steps_done, best_val_total=best_val,
        best_val_step=best_step, final_train_total=final_train,
        checkpoint_last=str(last_path), checkpoint_best=str(best_path),
        metrics_path=str(metrics_path), aborted=aborted)
