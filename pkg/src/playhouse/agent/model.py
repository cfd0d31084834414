"""Hierarchical multimodal agent.

One observation every ``period`` ticks feeds a multimodal transformer
(language tokens + policy/discriminator query tokens attending over conv
vision tokens), whose fused output drives a recurrent memory.  A low-level
recurrent controller expands each memory state into ``period`` per-tick
features, from which factorized movement heads decode one action per tick.
A small causal transformer decodes utterances from the memory state, and a
discriminator scores vision/language agreement for the contrastive loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..actions import MovementAction
from ..data.tokenizer import EOS, PAD
from ..numcore import tensor as T
from ..numcore.layers import (Dense, Embedding, LSTMCell, MLP, ConvStack,
                              TransformerBlock)
from ..numcore.params import ParameterSet
from ..numcore.tensor import Tensor
from .config import AgentConfig
from .heads import COMPONENT_INDEX, MOVEMENT_COMPONENTS, values_to_action

NEG_INF = -1e9


@dataclass
class RecurrentState:
    """Numpy-backed memory LSTM state carried across windows (detached)."""

    hs: list[np.ndarray]
    cs: list[np.ndarray]

    def copy(self) -> "RecurrentState":
        return RecurrentState([h.copy() for h in self.hs],
                              [c.copy() for c in self.cs])

    def masked_reset(self, reset: np.ndarray) -> "RecurrentState":
        keep = (1.0 - reset.astype(self.hs[0].dtype))[:, None]
        return RecurrentState([h * keep for h in self.hs],
                              [c * keep for c in self.cs])


def _conv_out(n: int, strides) -> int:
    for s in strides:
        n = -(-n // s)
    return n


class AgentModel:
    def __init__(self, config: AgentConfig, seed: int = 0):
        self.config = config
        self.params = ParameterSet()
        rng = np.random.default_rng(seed)
        c = config
        dm = c.dm
        root = self.params.scope("agent")

        # --- vision encoder ---
        self.n_vis_tokens = 0
        if not c.no_vision:
            self.conv = ConvStack(root.scope("conv"), rng, 3,
                                  list(c.channels), list(c.conv_strides))
            gh = _conv_out(c.input_height, c.conv_strides)
            gw = _conv_out(c.input_width, c.conv_strides)
            self.n_vis_tokens = gh * gw
            self.vis_proj = Dense(root.scope("vis_proj"), rng, c.channels[-1], dm)
            self.vis_pos = Embedding(root.scope("vis_pos"), rng,
                                     self.n_vis_tokens, dm)
            self.vis_pool = Dense(root.scope("vis_pool"), rng, dm, dm)

        # --- language observation encoder ---
        if not c.no_language:
            self.obs_embed = Embedding(root.scope("obs_embed"), rng,
                                       c.vocab_size, dm)
            self.obs_pos = Embedding(root.scope("obs_pos"), rng,
                                     c.max_tokens, dm)
            self.lang_pool = Dense(root.scope("lang_pool"), rng, dm, dm)

        # --- multimodal transformer ---
        self.query_tokens = root.add(
            "query_tokens", (rng.standard_normal((2, dm)) * 0.1
                             ).astype(T.default_dtype()))
        self.mmt = [TransformerBlock(root.scope(f"mmt{i}"), rng, dm, c.mmt_heads)
                    for i in range(c.mmt_layers)]

        # --- recurrent memory ---
        self.memory = []
        d_in = dm
        for i in range(c.memory_layers):
            self.memory.append(LSTMCell(root.scope(f"mem{i}"), rng,
                                        d_in, c.d_memory))
            d_in = c.d_memory

        # --- per-tick controller ---
        self.low_init = Dense(root.scope("low_init"), rng,
                              c.d_memory, 2 * c.d_low)
        if c.no_hierarchy:
            # flat mode: the whole agent runs at tick rate and the
            # controller consumes the full memory output every tick
            self.low = LSTMCell(root.scope("low"), rng, c.d_memory, c.d_low)
        else:
            self.step_embed = Embedding(root.scope("step_embed"), rng,
                                        c.period, c.d_cond)
            self.low = LSTMCell(root.scope("low"), rng, c.d_cond, c.d_low)

        # --- movement heads (zero-init: uniform policy at birth) ---
        used_as_cond = {dep for comp in MOVEMENT_COMPONENTS for dep in comp.cond}
        classes_of = {comp.name: comp.classes for comp in MOVEMENT_COMPONENTS}
        self.cond_embed = {
            name: Embedding(root.scope(f"cond_{name}"), rng,
                            classes_of[name], c.d_cond)
            for name in sorted(used_as_cond)}
        self.move_heads = {
            comp.name: Dense(root.scope(f"head_{comp.name}"), rng,
                             c.d_low + c.d_cond, comp.classes, zero_init=True)
            for comp in MOVEMENT_COMPONENTS}

        # --- language decoder ---
        self.speak_head = Dense(root.scope("speak_head"), rng, c.d_memory, 2,
                                zero_init=True)
        self.dec_prefix = Dense(root.scope("dec_prefix"), rng, c.d_memory, dm)
        self.dec_embed = Embedding(root.scope("dec_embed"), rng,
                                   c.vocab_size, dm)
        self.dec_pos = Embedding(root.scope("dec_pos"), rng,
                                 c.max_tokens + 1, dm)
        self.dec_blocks = [TransformerBlock(root.scope(f"dec{i}"), rng,
                                            dm, c.lang_heads)
                           for i in range(c.lang_layers)]
        self.dec_out = Dense(root.scope("dec_out"), rng, dm, c.vocab_size)

        # --- contrastive discriminator (zero-init last: 2 ln 2 at birth) ---
        if not c.no_contrastive:
            self.disc = MLP(root.scope("disc"), rng, [2 * dm, dm, 1],
                            zero_init_last=True)

    # ------------------------------------------------------------------
    # state
    # ------------------------------------------------------------------

    def initial_state(self, batch: int) -> RecurrentState:
        dt = T.default_dtype()
        z = [np.zeros((batch, self.config.d_memory), dtype=dt)
             for _ in range(self.config.memory_layers)]
        return RecurrentState([a.copy() for a in z], [a.copy() for a in z])

    # ------------------------------------------------------------------
    # perception
    # ------------------------------------------------------------------

    def _vision_tokens(self, pixels: np.ndarray) -> Tensor:
        c = self.config
        if c.low_res_vision:
            pixels = pixels[:, ::2, ::2, :]
        x = Tensor(np.ascontiguousarray(pixels, dtype=T.default_dtype()))
        feat = self.conv(x)
        b = feat.shape[0]
        toks = T.reshape(feat, (b, self.n_vis_tokens, c.channels[-1]))
        toks = self.vis_proj(toks)
        pos = self.vis_pos(np.arange(self.n_vis_tokens))
        return toks + pos

    def perceive(self, pixels: np.ndarray | None, lang_obs: np.ndarray,
                 vis_tokens: Tensor | None = None):
        """One observation. pixels [B,H,W,3] in [0,1]; lang_obs [B,L] ids.
        ``vis_tokens`` may carry already-encoded vision tokens for the same
        pixels (the conv pass can then be skipped).

        Returns (fused [B,dm], vision_emb [B,dm], lang_emb [B,dm],
        disc_emb [B,dm], vis_tokens).
        """
        c = self.config
        dm = c.dm
        b = lang_obs.shape[0] if not c.no_language else pixels.shape[0]
        dt = T.default_dtype()

        vision_emb = Tensor(np.zeros((b, dm), dtype=dt))
        if not c.no_vision:
            if vis_tokens is None:
                vis_tokens = self._vision_tokens(pixels)
            vision_emb = self.vis_pool(T.mean_axis(vis_tokens, axis=1))

        n_lang = 0 if c.no_language else c.max_tokens
        queries = []
        if n_lang:
            lang_q = self.obs_embed(lang_obs) + self.obs_pos(np.arange(n_lang))
            queries.append(lang_q)
        queries.append(T.embedding(self.query_tokens,
                                   np.tile(np.arange(2), (b, 1))))
        q = queries[0] if len(queries) == 1 else T.concat(queries, axis=1)

        tq = n_lang + 2
        tk = tq + (self.n_vis_tokens if vis_tokens is not None else 0)
        mask = np.zeros((b, 1, tq, tk), dtype=dt)
        if n_lang:
            pad_key = (lang_obs == PAD)
            mask[:, 0, :, :n_lang] = np.where(pad_key[:, None, :], NEG_INF, 0.0)
        for blk in self.mmt:
            q = blk(q, kv_extra=vis_tokens, mask=mask)

        fused = T.reshape(T.slice_axis(q, 1, n_lang, n_lang + 1), (b, dm))
        lang_emb = Tensor(np.zeros((b, dm), dtype=dt))
        if n_lang:
            # mean over non-pad language query outputs, then project
            w = (~(lang_obs == PAD)).astype(dt)
            denom = np.maximum(w.sum(axis=1, keepdims=True), 1.0)
            lq = T.slice_axis(q, 1, 0, n_lang)
            pooled = T.sum_axis(lq * Tensor(w[:, :, None]), axis=1) \
                * Tensor(1.0 / denom)
            lang_emb = self.lang_pool(pooled)
        disc_emb = T.reshape(T.slice_axis(q, 1, n_lang + 1, n_lang + 2), (b, dm))
        return fused, vision_emb, lang_emb, disc_emb, vis_tokens

    # ------------------------------------------------------------------
    # recurrence
    # ------------------------------------------------------------------

    def _memory_step(self, x: Tensor, hs, cs):
        new_h, new_c = [], []
        for layer, h, c in zip(self.memory, hs, cs):
            h2, c2 = layer(x, h, c)
            new_h.append(h2)
            new_c.append(c2)
            x = h2
        return x, new_h, new_c

    def step_window(self, fused: Tensor, hs, cs):
        """Advance memory for one observation; return per-tick features.

        hs/cs are lists of Tensors. Returns (ctrl [B,P,d_low], mem_out
        [B,d_memory], new hs/cs).
        """
        c = self.config
        b = fused.shape[0]
        mem_out, hs, cs = self._memory_step(fused, hs, cs)
        init = self.low_init(mem_out)
        lh = T.tanh(T.slice_axis(init, -1, 0, c.d_low))
        lc = T.slice_axis(init, -1, c.d_low, 2 * c.d_low)
        if c.no_hierarchy:
            lh, lc = self.low(mem_out, lh, lc)
            return T.reshape(lh, (b, 1, c.d_low)), mem_out, hs, cs
        feats = []
        for p in range(c.period):
            xin = self.step_embed(np.full((b,), p, dtype=np.int64))
            lh, lc = self.low(xin, lh, lc)
            feats.append(T.reshape(lh, (b, 1, c.d_low)))
        ctrl = T.concat(feats, axis=1)
        return ctrl, mem_out, hs, cs

    def unroll(self, batch: dict, state: RecurrentState):
        """Run K windows of a minibatch. Returns tensors for the losses and
        the detached carry-over state (with per-row resets applied first)."""
        c = self.config
        state = state.masked_reset(batch["reset"])
        hs = [Tensor(h) for h in state.hs]
        cs = [Tensor(x) for x in state.cs]
        b, k = batch["lang_obs"].shape[:2]
        ctrls, mems, vises, langs, discs = [], [], [], [], []
        vis_tok_cache: list = []
        for j in range(k):
            pixels = None if c.no_vision else batch["pixels"][:, j]
            fused, vis_emb, lang_emb, disc_emb, vtoks = self.perceive(
                pixels, batch["lang_obs"][:, j])
            vis_tok_cache.append(vtoks)
            ctrl, mem_out, hs, cs = self.step_window(fused, hs, cs)
            ctrls.append(T.reshape(ctrl, (b, 1, c.effective_period, c.d_low)))
            mems.append(T.reshape(mem_out, (b, 1, c.d_memory)))
            vises.append(T.reshape(vis_emb, (b, 1, c.dm)))
            langs.append(T.reshape(lang_emb, (b, 1, c.dm)))
            discs.append(T.reshape(disc_emb, (b, 1, c.dm)))
        out_state = RecurrentState([h.data.copy() for h in hs],
                                   [x.data.copy() for x in cs])
        return {
            "ctrl": T.concat(ctrls, axis=1),
            "mem": T.concat(mems, axis=1),
            "vision_emb": T.concat(vises, axis=1),
            "lang_emb": T.concat(langs, axis=1),
            "disc_emb": T.concat(discs, axis=1),
            "vis_tokens": vis_tok_cache,
        }, out_state

    # ------------------------------------------------------------------
    # heads
    # ------------------------------------------------------------------

    def movement_logits(self, ctrl: Tensor, name: str,
                        cond_values: dict[str, np.ndarray]) -> Tensor:
        """Logits for one movement component. ctrl [..., d_low]; cond_values
        maps conditioning component names to integer arrays of ctrl's leading
        shape (teacher forcing during training, sampled values at play)."""
        comp = MOVEMENT_COMPONENTS[COMPONENT_INDEX[name]]
        lead = tuple(ctrl.shape[:-1])
        dt = T.default_dtype()
        if comp.cond:
            cond = None
            for dep in comp.cond:
                e = self.cond_embed[dep](np.asarray(cond_values[dep]))
                cond = e if cond is None else cond + e
        else:
            cond = Tensor(np.zeros(lead + (self.config.d_cond,), dtype=dt))
        return self.move_heads[name](T.concat([ctrl, cond], axis=-1))

    def sample_actions(self, ctrl: Tensor,
                       rng: np.random.Generator | None = None
                       ) -> list[list[MovementAction]]:
        """Decode ctrl [B,P,d_low] into actions; argmax when rng is None."""
        b, p, _ = ctrl.shape
        values: dict[str, np.ndarray] = {}
        for comp in MOVEMENT_COMPONENTS:
            logits = self.movement_logits(ctrl, comp.name, values).data
            if rng is None:
                pick = np.argmax(logits, axis=-1)
            else:
                z = logits - logits.max(axis=-1, keepdims=True)
                prob = np.exp(z)
                prob /= prob.sum(axis=-1, keepdims=True)
                flat = prob.reshape(-1, comp.classes)
                u = rng.random((flat.shape[0], 1))
                pick = (flat.cumsum(axis=-1) > u).argmax(axis=-1)
                pick = pick.reshape(b, p)
            values[comp.name] = pick.astype(np.int64)
        out = []
        for i in range(b):
            row = []
            for j in range(p):
                row.append(values_to_action(
                    {k: int(v[i, j]) for k, v in values.items()}))
            out.append(row)
        return out

    # ------------------------------------------------------------------
    # language decoding
    # ------------------------------------------------------------------

    def speak_logits(self, mem: Tensor) -> Tensor:
        return self.speak_head(mem)

    def decode_language(self, mem: Tensor, tokens: np.ndarray) -> Tensor:
        """Teacher-forced decoder. mem [N,d_memory]; tokens [N,L] targets.
        Returns logits [N,L,vocab] where position t predicts tokens[:, t]."""
        n, length = tokens.shape
        dm = self.config.dm
        prefix = T.reshape(self.dec_prefix(mem), (n, 1, dm)) \
            + self.dec_pos(np.arange(1))
        if length > 1:
            emb = self.dec_embed(tokens[:, :-1]) \
                + self.dec_pos(np.arange(1, length))
            seq = T.concat([prefix, emb], axis=1)
        else:
            seq = prefix
        causal = np.triu(np.full((length, length), NEG_INF,
                                 dtype=T.default_dtype()), k=1)
        mask = causal[None, None, :, :]
        for blk in self.dec_blocks:
            seq = blk(seq, mask=mask)
        return self.dec_out(seq)

    def generate_utterance(self, mem: Tensor, max_len: int | None = None
                           ) -> list[list[int]]:
        """Greedy decode one utterance per row of mem [N,d_memory]."""
        n = mem.shape[0]
        limit = max_len or self.config.max_tokens
        done = np.zeros(n, dtype=bool)
        outs: list[list[int]] = [[] for _ in range(n)]
        cur = np.zeros((n, 0), dtype=np.int64)
        for _ in range(limit + 1):
            pos = cur.shape[1]
            feed = np.concatenate([cur, np.zeros((n, 1), np.int64)], axis=1)
            logits = self.decode_language(mem, feed).data
            nxt = np.argmax(logits[:, pos], axis=-1)
            for i in range(n):
                if done[i]:
                    continue
                if nxt[i] == EOS or nxt[i] == PAD:
                    done[i] = True
                else:
                    outs[i].append(int(nxt[i]))
            if done.all():
                break
            cur = np.concatenate([cur, nxt[:, None]], axis=1)
        return outs

    # ------------------------------------------------------------------
    # contrastive discriminator
    # ------------------------------------------------------------------

    def discriminate(self, vision_emb: Tensor, lang_emb: Tensor) -> Tensor:
        if self.config.no_contrastive:
            raise RuntimeError("discriminator disabled by configuration")
        return self.disc(T.concat([vision_emb, lang_emb], axis=-1))

    # ------------------------------------------------------------------

    def param_count(self) -> int:
        return self.params.total_count
