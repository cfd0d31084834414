"""Probe-based evaluation: argmax rollouts of a trained agent inside
seeded probe worlds, scored by the scripted reward predicates. The reward
predicates are reachable only from here — never from the loss path."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..actions import LanguageAction
from ..agent.model import AgentModel
from ..agent.policy import AgentPolicy
from ..data.episodes import Episode, EpisodeMeta, EpisodeStep, UtteranceEvent
from ..data.tokenizer import Tokenizer
from ..env import config as envcfg
from ..env.probes import (CLEAR_KIND, PROBE_KINDS, evaluate_probe,
                          instruction_for, spawn_clear_probe, spawn_probe)
from ..env.render import render
from ..env.world import step_inplace

INSTRUCTION_TICK = 10


@dataclass
class EvalReport:
    checkpoint_id: str
    n_episodes: int
    seed: int
    per_kind: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"checkpoint_id": self.checkpoint_id,
                "n_episodes": self.n_episodes, "seed": self.seed,
                "per_kind": self.per_kind}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(checkpoint_id=d["checkpoint_id"],
                   n_episodes=d["n_episodes"], seed=d["seed"],
                   per_kind=dict(d["per_kind"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(
            {"version": 1, "report": self.to_dict()}, indent=1))


def _rate_stderr(successes: list[bool]):
    n = len(successes)
    p = float(np.mean(successes)) if n else 0.0
    se = float(np.sqrt(p * (1.0 - p) / n)) if n else 0.0
    return p, se


def run_probe_episode(model: AgentModel, tokenizer: Tokenizer, kind: str,
                      seed: int, config: envcfg.EnvConfig | None = None,
                      rng: np.random.Generator | None = None):
    """Roll the agent in one probe world (argmax when rng is None).
    Returns (task, recorded Episode, success)."""
    config = config or envcfg.TRAIN_DEFAULT
    if kind == CLEAR_KIND:
        world, task = spawn_clear_probe(seed, config)
    else:
        world, task = spawn_probe(kind, seed, config)
    instruction = instruction_for(kind, task.target)
    inst_tokens = tokenizer.tokenize(instruction)[:model.config.max_tokens]
    policy = AgentPolicy(model, rng)
    period = model.config.effective_period

    steps: list[EpisodeStep] = []
    events = [UtteranceEvent(tick=INSTRUCTION_TICK, role="setter",
                             text=instruction)]
    for t in range(task.time_limit):
        pixels = render(world) if policy.tick % period == 0 else None
        sticky = inst_tokens if t >= INSTRUCTION_TICK else []
        action, utterance = policy.step(pixels, sticky)
        language = LanguageAction()
        if utterance:
            text = tokenizer.detokenize(utterance)
            language = LanguageAction(noop=False, tokens=tuple(utterance))
            events.append(UtteranceEvent(tick=t, role="solver", text=text))
        steps.append(EpisodeStep(movement=action, language=language))
        step_inplace(world, action)
    meta = EpisodeMeta(world_seed=task.world_seed,
                       config_text=envcfg.dumps(config),
                       source="agent", probe_kind=kind,
                       extra={"instruction": instruction})
    episode = Episode(meta=meta, steps=steps, utterances=events)
    return task, episode, evaluate_probe(task, episode)


def evaluate(model: AgentModel, tokenizer: Tokenizer,
             kinds: tuple = PROBE_KINDS, n_episodes: int = 100,
             seed: int = 0, config: envcfg.EnvConfig | None = None,
             checkpoint_id: str = "", progress=None) -> EvalReport:
    """Success rate ± stderr per probe kind over n seeded episodes."""
    for kind in kinds:
        if kind not in PROBE_KINDS + (CLEAR_KIND,):
            raise ValueError(f"unknown probe kind {kind!r}")
    report = EvalReport(checkpoint_id=checkpoint_id, n_episodes=n_episodes,
                        seed=seed)
    if n_episodes <= 0:
        return report
    for kind in kinds:
        wins: list[bool] = []
        for i in range(n_episodes):
            _, _, ok = run_probe_episode(model, tokenizer, kind,
                                         seed + i, config)
            wins.append(ok)
            if progress is not None:
                progress(kind, i + 1, n_episodes)
        rate, se = _rate_stderr(wins)
        report.per_kind[kind] = {"success_rate": rate, "stderr": se,
                                 "n": len(wins)}
    return report
