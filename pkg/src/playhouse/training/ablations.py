"""Ablation harness: trains the baseline agent plus each ablated variant
(no_vision, no_language, no_contrastive, no_hierarchy, low_res_vision) under
one shared schedule and reports probe success side by side.

Reports are versioned JSON documents with a plot-ready CSV alongside.
A variant failure is recorded and the comparison continues.
"""

from __future__ import annotations

import csv
import json
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from ..agent.config import ABLATIONS, AgentConfig
from ..data.dataset import Dataset
from .checkpoints import load_agent
from .evaluate import evaluate
from .loop import TrainSchedule, train

ABLATION_REPORT_VERSION = 1
CSV_FIELDS = ("variant", "kind", "success_rate", "stderr", "n",
              "best_val_total", "params", "status")

# probe kinds that exercise the ablated modality, for directional reading
MODALITY_PROBES = {
    "no_vision": ("go", "lift"),
    "no_language": ("go", "lift", "color"),
}


@dataclass
class AblationSpec:
    ablations: tuple[str, ...] = ABLATIONS
    eval_kinds: tuple[str, ...] = ("go", "lift", "color")
    eval_episodes: int = 20
    eval_seed: int = 800_000
    base_config: AgentConfig = field(default_factory=AgentConfig)
    schedule: TrainSchedule = field(default_factory=TrainSchedule)

    def __post_init__(self):
        bad = [a for a in self.ablations if a not in ABLATIONS]
        if bad:
            raise ValueError(f"unknown ablations {bad}")

    def variants(self):
        yield "baseline", self.base_config
        for name in self.ablations:
            yield name, self.base_config.with_ablation(name)


def run_ablations(dataset: Dataset, spec: AblationSpec, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tokenizer = dataset.tokenizer
    rows = []
    for name, config in spec.variants():
        row: dict = {"variant": name, "status": "ok"}
        try:
            res = train(dataset, config, spec.schedule, out / name)
            row["best_val_total"] = res.best_val_total
            row["aborted"] = res.aborted
            model, _ = load_agent(res.checkpoint_best)
            row["params"] = model.param_count()
            report = evaluate(model, tokenizer, spec.eval_kinds,
                              spec.eval_episodes, seed=spec.eval_seed,
                              checkpoint_id=res.checkpoint_best)
            row["per_kind"] = report.per_kind
        except Exception as exc:  # record and continue with other variants
            row["status"] = "failed"
            row["error"] = f"{type(exc).__name__}: {exc}"
            row["trace"] = traceback.format_exc()
        rows.append(row)

    report = {"version": ABLATION_REPORT_VERSION,
              "ablations": list(spec.ablations),
              "eval_kinds": list(spec.eval_kinds),
              "eval_episodes": spec.eval_episodes,
              "steps": spec.schedule.steps,
              "rows": rows}
    (out / "ablations.json").write_text(json.dumps(report, indent=1))
    with open(out / "ablations.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_FIELDS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            for kind, cell in row.get("per_kind", {}).items():
                w.writerow({**row, "kind": kind, **cell})
    return report


def modality_deficits(report: dict) -> dict:
    """Mean success on modality-dependent probes, baseline minus variant,
    for each sensory ablation present; positive = variant scores worse."""
    by_name = {r["variant"]: r for r in report["rows"] if r["status"] == "ok"}
    base = by_name.get("baseline", {}).get("per_kind", {})
    out = {}
    for name, kinds in MODALITY_PROBES.items():
        row = by_name.get(name)
        if row is None:
            continue
        pairs = [(base[k]["success_rate"], row["per_kind"][k]["success_rate"])
                 for k in kinds if k in base and k in row["per_kind"]]
        if pairs:
            out[name] = sum(b - v for b, v in pairs) / len(pairs)
    return out
