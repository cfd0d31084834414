"""Behavioural-transfer harness: fine-tune a pre-trained agent on a small
corpus for a new noun (an extension shape added to the catalog) or a new
verb (clearing all objects off a surface), co-training on a slice of the
original demonstrations, against a from-scratch control at every budget.

Reports are versioned JSON documents with a plot-ready CSV alongside.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..data.dataset import Dataset
from ..env import config as envcfg
from ..env.config import EXTENSION_SHAPE
from ..env.probes import CLEAR_KIND, spawn_probe
from ..oracle.datagen import run_demonstration
from .checkpoints import load_agent
from .evaluate import _rate_stderr, run_probe_episode
from .loop import TrainSchedule, train

TRANSFER_REPORT_VERSION = 1
CSV_FIELDS = ("mode", "budget", "arm", "kind", "success_rate", "stderr",
              "n", "best_val_total", "status")

MODES = ("new_noun", "new_verb")
NOUN_KINDS = ("lift", "color")


@dataclass
class TransferSpec:
    mode: str = "new_verb"
    budgets: tuple[int, ...] = (4, 8, 16)     # new-task episode counts
    base_episodes: int = 16                   # original demos co-trained
    val_episodes: int = 4                     # held-out new-task demos
    eval_episodes: int = 20
    data_seed: int = 600_000                  # demo generation seed base
    eval_seed: int = 700_000                  # probe evaluation seed base
    schedule: TrainSchedule = field(default_factory=TrainSchedule)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown transfer mode {self.mode!r}")
        if not self.budgets or list(self.budgets) != sorted(set(self.budgets)):
            raise ValueError("budgets must be strictly increasing")


def extension_config(config: envcfg.EnvConfig) -> envcfg.EnvConfig:
    """The environment config with the extension shape spawnable."""
    if EXTENSION_SHAPE in config.catalog:
        return config
    return config.with_catalog(tuple(config.catalog) + (EXTENSION_SHAPE,))


def matching_probe_seeds(kind: str, config: envcfg.EnvConfig, n: int,
                         start: int, predicate, max_tries: int = 200_000):
    """First n seeds >= start whose spawned probe task satisfies predicate."""
    seeds = []
    for s in range(start, start + max_tries):
        _, task = spawn_probe(kind, s, config)
        if predicate(task):
            seeds.append(s)
            if len(seeds) == n:
                return seeds
    raise RuntimeError(f"found only {len(seeds)}/{n} matching {kind} seeds")


def _new_task_plan(spec: TransferSpec, config: envcfg.EnvConfig):
    """(env config, [(kind, demo seeds)], {kind: eval seeds}) for the mode."""
    n_demo = max(spec.budgets) + spec.val_episodes
    if spec.mode == "new_verb":
        demo = [(CLEAR_KIND, list(range(spec.data_seed, spec.data_seed + n_demo)))]
        evals = {CLEAR_KIND: list(range(spec.eval_seed,
                                        spec.eval_seed + spec.eval_episodes))}
        return config, demo, evals
    ext = extension_config(config)
    is_new = lambda task: task.target.get("shape") == EXTENSION_SHAPE
    demo, evals = [], {}
    for j, kind in enumerate(NOUN_KINDS):
        per = (n_demo + len(NOUN_KINDS) - 1) // len(NOUN_KINDS)
        demo.append((kind, matching_probe_seeds(
            kind, ext, per, spec.data_seed + j * 1_000_000, is_new)))
        evals[kind] = matching_probe_seeds(
            kind, ext, spec.eval_episodes, spec.eval_seed + j * 1_000_000,
            is_new)
    return ext, demo, evals


def _eval_on_seeds(model, tokenizer, eval_seeds: dict, config) -> dict:
    per_kind = {}
    for kind, seeds in eval_seeds.items():
        wins = [run_probe_episode(model, tokenizer, kind, s, config)[2]
                for s in seeds]
        rate, se = _rate_stderr(wins)
        per_kind[kind] = {"success_rate": rate, "stderr": se, "n": len(wins)}
    return per_kind


def _mean_success(per_kind: dict) -> float:
    rates = [c["success_rate"] for c in per_kind.values()]
    return float(np.mean(rates)) if rates else 0.0


def finetune_transfer(dataset: Dataset, pretrained_checkpoint,
                      spec: TransferSpec, out_dir, progress=None) -> dict:
    """Fine-tune vs from-scratch across new-data budgets; returns the report
    (also written to transfer.json / transfer.csv under out_dir)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tokenizer = dataset.tokenizer
    cfg_path = dataset.root / "env.cfg"
    config = envcfg.load(cfg_path) if cfg_path.exists() else envcfg.TRAIN_DEFAULT
    task_config, demo_plan, eval_seeds = _new_task_plan(spec, config)

    new_eps = []
    for kind, seeds in demo_plan:
        for s in seeds:
            new_eps.append(run_demonstration(kind, s, task_config, tokenizer))
    rng = np.random.default_rng(spec.data_seed)
    order = rng.permutation(len(new_eps))
    new_eps = [new_eps[i] for i in order]
    val_eps = new_eps[:spec.val_episodes]
    pool = new_eps[spec.val_episodes:]

    base_idx = dataset.split_indices("train")[:spec.base_episodes]
    base_eps = [dataset.episode(i) for i in base_idx]

    pre_model, _ = load_agent(pretrained_checkpoint)
    agent_config = pre_model.config
    pre_eval = _eval_on_seeds(pre_model, tokenizer, eval_seeds, task_config)
    rows = [{"mode": spec.mode, "budget": 0, "arm": "pretrained",
             "status": "ok", "per_kind": pre_eval,
             "mean_success": _mean_success(pre_eval)}]

    for budget in spec.budgets:
        train_eps = base_eps + pool[:budget]
        for arm in ("finetuned", "scratch"):
            row = {"mode": spec.mode, "budget": budget, "arm": arm,
                   "status": "ok"}
            try:
                model = load_agent(pretrained_checkpoint)[0] \
                    if arm == "finetuned" else None
                sched = replace(spec.schedule)
                res = train((train_eps, val_eps, tokenizer), agent_config,
                            sched, out / f"b{budget}_{arm}", model=model)
                row["best_val_total"] = res.best_val_total
                best, _ = load_agent(res.checkpoint_best)
                per_kind = _eval_on_seeds(best, tokenizer, eval_seeds,
                                          task_config)
                row["per_kind"] = per_kind
                row["mean_success"] = _mean_success(per_kind)
            except Exception as exc:  # record and continue with other arms
                row["status"] = "failed"
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
            if progress is not None:
                progress(budget, arm, row)

    report = {"version": TRANSFER_REPORT_VERSION,
              "mode": spec.mode,
              "budgets": list(spec.budgets),
              "base_episodes": spec.base_episodes,
              "eval_episodes": spec.eval_episodes,
              "steps": spec.schedule.steps,
              "rows": rows}
    (out / "transfer.json").write_text(json.dumps(report, indent=1))
    with open(out / "transfer.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_FIELDS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            for kind, cell in row.get("per_kind", {}).items():
                w.writerow({**row, "kind": kind, **cell})
    return report


def budget_curve(report: dict, arm: str):
    """(budget, mean success over kinds) rows for one arm, ok rows only."""
    return [(r["budget"], r["mean_success"]) for r in report["rows"]
            if r["arm"] == arm and r["status"] == "ok"]
