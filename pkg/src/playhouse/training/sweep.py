"""Scaling harness: trains one model per (dataset fraction, width, seed)
cell with a shared schedule and evaluation protocol, and reports validation
losses plus an early-stopping-vs-final probe comparison.

Reports are versioned JSON documents with a plot-ready CSV alongside.
Trends only — a cell failure is recorded and the sweep continues.
"""

from __future__ import annotations

import csv
import json
import traceback
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..agent.config import AgentConfig
from ..data.dataset import Dataset
from .checkpoints import load_agent
from .evaluate import evaluate
from .loop import TrainSchedule, train

SWEEP_REPORT_VERSION = 1
CSV_FIELDS = ("fraction", "width", "seed", "status", "best_val_total",
              "best_val_step", "final_train_total", "params",
              "early_stop_success", "final_success")


@dataclass
class SweepSpec:
    fractions: tuple[float, ...] = (0.125, 0.25, 0.5, 1.0)
    widths: tuple[float, ...] = (1.0,)
    seeds: int = 3
    early_stopping_eval: bool = False
    eval_kinds: tuple[str, ...] = ("go", "lift")
    eval_episodes: int = 20
    schedule: TrainSchedule = field(default_factory=TrainSchedule)

    def __post_init__(self):
        bad = [f for f in self.fractions
               if f not in (0.0625, 0.125, 0.25, 0.5, 1.0)]
        if bad:
            raise ValueError(f"unsupported dataset fractions {bad}")
        if len(self.fractions) < 2 and len(self.widths) < 2:
            raise ValueError("at least one sweep axis needs >= 2 points")

    def cells(self):
        for frac in self.fractions:
            for width in self.widths:
                for seed in range(self.seeds):
                    yield frac, width, seed


def _mean_success(report) -> float:
    rates = [c["success_rate"] for c in report.per_kind.values()]
    return float(np.mean(rates)) if rates else 0.0


def run_sweep(dataset: Dataset, spec: SweepSpec, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tokenizer = dataset.tokenizer
    cells = []
    for frac, width, seed in spec.cells():
        tag = f"f{frac:g}_w{width:g}_s{seed}"
        cell: dict = {"fraction": frac, "width": width, "seed": seed,
                      "status": "ok"}
        try:
            sched = replace(spec.schedule, seed=spec.schedule.seed + seed,
                            fraction=frac)
            cfg = AgentConfig(width_multiplier=width)
            res = train(dataset, cfg, sched, out / tag)
            cell.update(best_val_total=res.best_val_total,
                        best_val_step=res.best_val_step,
                        final_train_total=res.final_train_total,
                        aborted=res.aborted)
            best_model, _ = load_agent(res.checkpoint_best)
            cell["params"] = best_model.param_count()
            if spec.early_stopping_eval:
                early = evaluate(best_model, tokenizer, spec.eval_kinds,
                                 spec.eval_episodes, seed=900_000,
                                 checkpoint_id=res.checkpoint_best)
                final_model, _ = load_agent(res.checkpoint_last)
                final = evaluate(final_model, tokenizer, spec.eval_kinds,
                                 spec.eval_episodes, seed=900_000,
                                 checkpoint_id=res.checkpoint_last)
                cell["early_stop_success"] = _mean_success(early)
                cell["final_success"] = _mean_success(final)
                cell["early_stop_eval"] = early.to_dict()
                cell["final_eval"] = final.to_dict()
        except Exception as exc:  # record and continue with other cells
            cell["status"] = "failed"
            cell["error"] = f"{type(exc).__name__}: {exc}"
            cell["trace"] = traceback.format_exc()
        cells.append(cell)

    report = {"version": SWEEP_REPORT_VERSION,
              "spec": {"fractions": list(spec.fractions),
                       "widths": list(spec.widths), "seeds": spec.seeds,
                       "early_stopping_eval": spec.early_stopping_eval,
                       "steps": spec.schedule.steps},
              "cells": cells}
    (out / "sweep.json").write_text(json.dumps(report, indent=1))
    with open(out / "sweep.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_FIELDS, extrasaction="ignore")
        w.writeheader()
        for cell in cells:
            w.writerow(cell)
    return report


def fraction_loss_curve(report: dict, width: float = 1.0):
    """(fraction, mean best-val, stderr) rows for one width, ok cells only."""
    rows = []
    fractions = sorted({c["fraction"] for c in report["cells"]})
    for frac in fractions:
        vals = [c["best_val_total"] for c in report["cells"]
                if c["status"] == "ok" and c["fraction"] == frac
                and c["width"] == width]
        if vals:
            se = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) \
                if len(vals) > 1 else 0.0
            rows.append((frac, float(np.mean(vals)), se))
    return rows
