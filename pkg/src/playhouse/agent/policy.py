"""Tick-level driver around the model for live play and evaluation.

The model observes once every ``period`` ticks and emits a block of
per-tick actions; this wrapper buffers the block, keeps the recurrent
state between observations, and surfaces any generated utterance.
"""

from __future__ import annotations

import numpy as np

from ..actions import MovementAction
from ..data.tokenizer import PAD
from ..numcore import tensor as T
from ..numcore.tensor import Tensor
from .model import AgentModel


class AgentPolicy:
    def __init__(self, model: AgentModel, rng: np.random.Generator | None = None):
        self.model = model
        self.rng = rng  # None: argmax actions
        self.reset()

    def reset(self) -> None:
        state = self.model.initial_state(1)
        self._hs = [Tensor(h) for h in state.hs]
        self._cs = [Tensor(c) for c in state.cs]
        self._pending: list[MovementAction] = []
        self.tick = 0

    def _observe(self, pixels: np.ndarray, lang_tokens) -> list[int] | None:
        c = self.model.config
        obs = np.full((1, c.max_tokens), PAD, dtype=np.int64)
        toks = list(lang_tokens or [])[:c.max_tokens]
        if toks:
            obs[0, :len(toks)] = toks
        px = None
        if not c.no_vision:
            px = np.asarray(pixels, dtype=T.default_dtype())[None]
            if px.max() > 1.5:
                px = px / 255.0
        fused, _, _, _, _ = self.model.perceive(px, obs)
        ctrl, mem, self._hs, self._cs = self.model.step_window(
            fused, self._hs, self._cs)
        self._pending = self.model.sample_actions(ctrl, self.rng)[0]
        utterance = None
        speak = self.model.speak_logits(mem).data[0]
        say = bool(np.argmax(speak) == 1) if self.rng is None else \
            bool(self.rng.random() < _softmax1(speak))
        if say:
            utterance = self.model.generate_utterance(mem)[0]
        return utterance

    def step(self, pixels: np.ndarray, lang_tokens=None):
        """Advance one tick. pixels [H,W,3]; lang_tokens: current sticky
        instruction ids. Returns (MovementAction, utterance ids or None)."""
        utterance = None
        if self.tick % self.model.config.effective_period == 0:
            utterance = self._observe(pixels, lang_tokens)
        self.tick += 1
        return self._pending.pop(0), utterance


def _softmax1(logits: np.ndarray) -> float:
    z = logits - logits.max()
    e = np.exp(z)
    return float(e[1] / e.sum())
