"""Adam optimizer with per-parameter NaN-gradient skipping."""

from __future__ import annotations

import numpy as np

from .params import ParameterSet


class Adam:
    def __init__(self, params: ParameterSet, lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, grad_clip: float | None = 1.0):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.grad_clip = grad_clip
        self.step_count = 0
        self.skip_count = 0
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        missing = set(self.m) - set(grads)
        extra = set(grads) - set(self.m)
        if missing or extra:
            raise KeyError(f"gradient keys mismatch: missing={sorted(missing)[:3]} "
                           f"extra={sorted(extra)[:3]}")
        self.step_count += 1
        if self.grad_clip is not None:
            sq = sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values())
            norm = np.sqrt(sq)
            if norm > self.grad_clip:
                scale = self.grad_clip / (norm + 1e-12)
                grads = {k: g * scale for k, g in grads.items()}
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for k, p in self.params.items():
            g = grads[k]
            if not np.all(np.isfinite(g)):
                self.skip_count += 1
                continue
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data = p.data - self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
