"""Joint imitation objective: behavioural-cloning terms over the factorized
movement heads and the language decoder, plus the cross-modal contrastive
term driven by in-batch language shuffling.

All reported components are per-unit masked means (per active tick for
movement, per token for language, per pair for contrastive); ``total`` is
their weighted sum. Gating heads (movement no-op, speak/no-op) are always
active; action heads are masked out wherever the target is a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..agent.heads import MOVEMENT_COMPONENTS, batch_component_targets
from ..agent.model import AgentModel, RecurrentState
from ..data.batching import contrastive_shuffle
from ..data.tokenizer import PAD
from ..numcore import tensor as T
from ..numcore.tensor import Tensor

LAMBDA_CONTRASTIVE = 1.0


@dataclass
class LossReport:
    total: float
    bc_movement: float
    bc_language: float
    bc_noop: float
    contrastive: float
    per_head: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    split: str = "train"

    def is_finite(self) -> bool:
        vals = [self.total, self.bc_movement, self.bc_language,
                self.bc_noop, self.contrastive]
        return bool(np.all(np.isfinite(vals)))

    def to_dict(self) -> dict:
        return {"total": self.total, "bc_movement": self.bc_movement,
                "bc_language": self.bc_language, "bc_noop": self.bc_noop,
                "contrastive": self.contrastive, "per_head": self.per_head,
                "counts": self.counts, "split": self.split}


def _binary_ce(logit: Tensor, target: int) -> Tensor:
    """-ln sigma(x) for target 1, -ln(1-sigma(x)) for target 0, per row.

    Expressed as two-class cross-entropy against a zero reference logit:
    numerically stable with the exact sigma(x)-target gradient (a naive
    relu/log1p softplus decomposition has a spurious zero gradient at
    x = 0, which is exactly where the zero-initialized discriminator sits).
    """
    n = logit.shape[0]
    zero = Tensor(np.zeros((n, 1), dtype=T.default_dtype()))
    pair = T.concat([zero, T.reshape(logit, (n, 1))], axis=1)
    return T.softmax_cross_entropy(pair, np.full(n, target, dtype=np.int64))


def _masked_mean(per_item: Tensor, mask: np.ndarray, denom: int) -> Tensor:
    m = Tensor(mask.reshape(-1).astype(T.default_dtype()))
    return T.sum_axis(per_item * m) * (1.0 / max(denom, 1))


def _bc_terms(model: AgentModel, batch: dict, outs: dict):
    cfg = model.config
    ctrl = outs["ctrl"]
    b, k, p, _ = ctrl.shape
    targets = batch_component_targets(batch)
    step_mask = batch["step_mask"].astype(bool)
    m_all = batch["mv_mask"].astype(bool) & step_mask[:, :, None]
    noop_t = targets["noop"].astype(bool)
    m_act = m_all & ~noop_t
    n_all = int(m_all.sum())
    n_act = int(m_act.sum())

    per_head: dict[str, Tensor] = {}
    for comp in MOVEMENT_COMPONENTS:
        logits = model.movement_logits(ctrl, comp.name, targets)
        flat = T.reshape(logits, (b * k * p, comp.classes))
        ce = T.softmax_cross_entropy(flat, targets[comp.name].reshape(-1))
        if comp.name == "noop":
            per_head[comp.name] = _masked_mean(ce, m_all, n_all)
        else:
            per_head[comp.name] = _masked_mean(ce, m_act, n_act)

    bc_movement = None
    for comp in MOVEMENT_COMPONENTS:
        if comp.name == "noop":
            continue
        bc_movement = per_head[comp.name] if bc_movement is None \
            else bc_movement + per_head[comp.name]

    # language: speak/no-op gate per window, token CE on speaking windows
    mem = T.reshape(outs["mem"], (b * k, cfg.d_memory))
    speak_t = (~batch["lg_noop"].astype(bool) & step_mask).astype(np.int64)
    speak_ce = T.softmax_cross_entropy(model.speak_logits(mem),
                                       speak_t.reshape(-1))
    n_win = int(step_mask.sum())
    per_head["speak"] = _masked_mean(speak_ce, step_mask, n_win)

    tokens = batch["lg_tokens"].reshape(b * k, -1)
    tok_mask = (tokens != PAD) & speak_t.reshape(-1, 1).astype(bool)
    n_tok = int(tok_mask.sum())
    if n_tok:
        length = tokens.shape[1]
        lg = model.decode_language(mem, tokens)
        ce = T.softmax_cross_entropy(
            T.reshape(lg, (b * k * length, cfg.vocab_size)),
            tokens.reshape(-1))
        bc_language = _masked_mean(ce, tok_mask, n_tok)
    else:
        bc_language = Tensor(np.zeros((), dtype=T.default_dtype()))
    per_head["language_tokens"] = bc_language

    bc_noop = per_head["noop"] + per_head["speak"]
    counts = {"movement_ticks": n_all, "active_ticks": n_act,
              "windows": n_win, "language_tokens": n_tok}
    return bc_movement, bc_language, bc_noop, per_head, counts


def _contrastive_term(model: AgentModel, batch: dict, outs: dict):
    cfg = model.config
    shuffled = contrastive_shuffle(batch)
    pair_mask = shuffled["pair_mask"].astype(bool)
    b, k = pair_mask.shape
    n_pairs = int(pair_mask.sum())
    if n_pairs == 0:
        return Tensor(np.zeros((), dtype=T.default_dtype())), 0

    # extra perception pass for the mismatched language; the vision tokens
    # from the matched pass are reused (same pixels, conv skipped)
    mis_embs = []
    for j in range(k):
        pixels = None if cfg.no_vision else batch["pixels"][:, j]
        _, _, lang_mis, _, _ = model.perceive(
            pixels, shuffled["lang_obs_mismatch"][:, j],
            vis_tokens=outs["vis_tokens"][j])
        mis_embs.append(T.reshape(lang_mis, (b, 1, cfg.dm)))
    lang_mis = T.concat(mis_embs, axis=1)

    vis = T.reshape(outs["vision_emb"], (b * k, cfg.dm))
    lang = T.reshape(outs["lang_emb"], (b * k, cfg.dm))
    mis = T.reshape(lang_mis, (b * k, cfg.dm))
    logit_m = T.reshape(model.discriminate(vis, lang), (b * k,))
    logit_x = T.reshape(model.discriminate(vis, mis), (b * k,))
    per_pair = _binary_ce(logit_m, 1) + _binary_ce(logit_x, 0)
    return _masked_mean(per_pair, pair_mask, n_pairs), n_pairs


def joint_loss(model: AgentModel, batch: dict,
               state: RecurrentState | None = None,
               lambda_contrastive: float = LAMBDA_CONTRASTIVE,
               split: str = "train"):
    """Full training objective. Returns (loss Tensor, LossReport, new state)."""
    if state is None:
        state = model.initial_state(batch["lang_obs"].shape[0])
    outs, new_state = model.unroll(batch, state)
    bc_movement, bc_language, bc_noop, per_head, counts = \
        _bc_terms(model, batch, outs)
    total = bc_movement + bc_language + bc_noop
    if model.config.no_contrastive or lambda_contrastive == 0.0:
        contrastive = Tensor(np.zeros((), dtype=T.default_dtype()))
        counts["pairs"] = 0
    else:
        contrastive, n_pairs = _contrastive_term(model, batch, outs)
        counts["pairs"] = n_pairs
        total = total + lambda_contrastive * contrastive
    report = LossReport(
        total=float(total.data), bc_movement=float(bc_movement.data),
        bc_language=float(bc_language.data), bc_noop=float(bc_noop.data),
        contrastive=float(contrastive.data),
        per_head={n: float(v.data) for n, v in per_head.items()},
        counts=counts, split=split)
    return total, report, new_state


def bc_loss(model: AgentModel, batch: dict,
            state: RecurrentState | None = None, split: str = "train"):
    """Behavioural-cloning terms only (no contrastive pass)."""
    return joint_loss(model, batch, state, lambda_contrastive=0.0,
                      split=split)


def contrastive_loss(model: AgentModel, batch: dict,
                     state: RecurrentState | None = None):
    """Contrastive term only. Returns (scalar Tensor, pair count)."""
    if state is None:
        state = model.initial_state(batch["lang_obs"].shape[0])
    outs, _ = model.unroll(batch, state)
    return _contrastive_term(model, batch, outs)
