"""Demonstration generation: scripted setter + solver rollouts written to
shards, with the tokenizer and dataset manifest alongside."""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from ..actions import LanguageAction, MovementAction
from ..data.dataset import Dataset, build_manifest
from ..data.episodes import (Episode, EpisodeMeta, EpisodeStep, ShardWriter,
                             UtteranceEvent)
from ..data.tokenizer import Tokenizer, build_tokenizer
from ..env import config as envcfg
from ..env.probes import CLEAR_KIND, PROBE_KINDS, spawn_clear_probe, spawn_probe
from ..env.world import step_inplace
from .setter import language_corpus, setter_propose
from .solver import ScriptedSolver, SolverConfig

VOCAB_WORDS = 512


def make_tokenizer(config: envcfg.EnvConfig) -> Tokenizer:
    return build_tokenizer(language_corpus(config), max_words=VOCAB_WORDS)


def run_demonstration(kind: str, seed: int, config: envcfg.EnvConfig,
                      tokenizer: Tokenizer,
                      solver_config: SolverConfig | None = None,
                      extra_ticks: int = 20) -> Episode:
    """One scripted episode: the setter utters an instruction a few ticks in,
    the solver then completes the task. Deterministic in (kind, seed)."""
    if kind == CLEAR_KIND:
        world, task = spawn_clear_probe(seed, config)
    else:
        world, task = spawn_probe(kind, seed, config)
    rng = np.random.default_rng(np.uint64(seed * 7919 + 11))
    goal = setter_propose(kind, task.target, rng)
    scfg = solver_config or SolverConfig(seed=seed)
    solver = ScriptedSolver(kind, task.target, scfg)
    t0 = int(rng.integers(4, 16))

    steps: list[EpisodeStep] = []
    events = [UtteranceEvent(tick=t0, role="setter", text=goal.instruction)]
    tail = None
    wall0 = time.monotonic()
    for t in range(task.time_limit):
        if t < t0:
            movement, text = MovementAction(noop=True), None
        else:
            movement, text = solver.act(world)
        language = LanguageAction()
        if text is not None:
            tokens = tuple(tokenizer.tokenize(text)[:25])
            language = LanguageAction(noop=False, tokens=tokens)
            events.append(UtteranceEvent(tick=t, role="solver", text=text))
        steps.append(EpisodeStep(movement=movement, language=language))
        step_inplace(world, movement)
        if solver.done and tail is None:
            tail = t + extra_ticks
        if tail is not None and t >= tail:
            break
    meta = EpisodeMeta(world_seed=task.world_seed,
                       config_text=envcfg.dumps(config),
                       source="oracle", probe_kind=kind,
                       wall_clock=time.monotonic() - wall0,
                       extra={"instruction": goal.instruction,
                              "target": {k: (int(v) if isinstance(v, (int, np.integer))
                                             else v) for k, v in task.target.items()},
                              "solved": bool(solver.done)})
    return Episode(meta=meta, steps=steps, utterances=events)


def generate_dataset(out_dir, n_episodes: int, seed: int = 0,
                     config: envcfg.EnvConfig | None = None,
                     kinds: tuple = PROBE_KINDS,
                     shard_size: int = 200,
                     solver_config: SolverConfig | None = None,
                     progress=None) -> Path:
    """Write shards + tokenizer + manifest under out_dir; returns the
    manifest path."""
    config = config or envcfg.TRAIN_DEFAULT
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tokenizer = make_tokenizer(config)
    tokenizer.save(out / "tokenizer.json")
    envcfg.save(config, out / "env.cfg")

    mix: dict[str, int] = {}
    shard_names: list[str] = []
    writer = None
    written = 0
    for i in range(n_episodes):
        kind = kinds[i % len(kinds)]
        ep_seed = seed * 1_000_000 + i + 1
        scfg = solver_config or SolverConfig(seed=ep_seed)
        ep = run_demonstration(kind, ep_seed, config, tokenizer, scfg)
        mix[kind] = mix.get(kind, 0) + 1
        if writer is None:
            name = f"shard-{len(shard_names):04d}"
            shard_names.append(name + ".rec")
            writer = ShardWriter(out / name)
        writer.append(ep)
        written += 1
        if written % shard_size == 0:
            writer.close()
            writer = None
        if progress is not None and (i + 1) % 50 == 0:
            progress(i + 1, n_episodes)
    if writer is not None:
        writer.close()

    manifest = build_manifest(out, shard_names, "tokenizer.json",
                              tokenizer.hash(), seed=seed, mix=mix)
    path = out / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=1)
    return path


def solve_probe_episode(kind: str, seed: int, config: envcfg.EnvConfig,
                        tokenizer: Tokenizer | None = None) -> tuple:
    """(task, episode) pair for competence checks: the scripted solver run
    against the probe evaluator."""
    tokenizer = tokenizer or make_tokenizer(config)
    if kind == CLEAR_KIND:
        world, task = spawn_clear_probe(seed, config)
    else:
        world, task = spawn_probe(kind, seed, config)
    ep = run_demonstration(kind, seed, config, tokenizer)
    return task, ep
