"""BPTT minibatch assembly over episode streams, with lazy raster replay
and the cyclic-shift mismatch pairing for the contrastive loss."""

from __future__ import annotations

import numpy as np

from ..actions import MAX_LANGUAGE_TOKENS
from ..env import generate_world, render, step_inplace
from .dataset import BatchConfig, Dataset
from .episodes import Episode, sticky_language
from .tokenizer import EOS, PAD, Tokenizer

HIERARCHY_PERIOD = 8
LANG_OBS_LEN = MAX_LANGUAGE_TOKENS
LANG_TGT_LEN = MAX_LANGUAGE_TOKENS + 1  # room for the end token


class PreparedEpisode:
    """Per-tick target arrays plus a replayable world for observations."""

    def __init__(self, ep: Episode, tokenizer: Tokenizer):
        self.episode = ep
        T = ep.T
        self.T = T
        self.move = np.zeros((T, 2), dtype=np.int16)
        self.look = np.zeros((T, 2), dtype=np.int16)
        self.rot = np.zeros((T, 3, 3), dtype=np.int8)
        self.pp = np.zeros((T, 3), dtype=np.int8)
        self.grab = np.zeros(T, dtype=bool)
        self.noop = np.zeros(T, dtype=bool)
        for t, st in enumerate(ep.steps):
            a = st.movement
            self.noop[t] = a.noop
            self.move[t] = a.move
            self.look[t] = a.look
            self.rot[t] = a.rotation
            self.pp[t] = a.push_pull
            self.grab[t] = a.grab
        sticky = sticky_language(ep)
        cache: dict[str, np.ndarray] = {}
        self.lang_obs = np.zeros((T, LANG_OBS_LEN), dtype=np.int32)
        self.lang_has = np.zeros(T, dtype=bool)
        for t, text in enumerate(sticky):
            if not text:
                continue
            if text not in cache:
                ids = tokenizer.tokenize(text)[:LANG_OBS_LEN]
                row = np.zeros(LANG_OBS_LEN, dtype=np.int32)
                row[:len(ids)] = ids
                cache[text] = row
            self.lang_obs[t] = cache[text]
            self.lang_has[t] = True
        # language targets live on low-level ticks; a high-level step adopts
        # the first non-noop utterance within its period
        self.lg_tokens = np.zeros((T, LANG_TGT_LEN), dtype=np.int32)
        self.lg_noop = np.ones(T, dtype=bool)
        for t, st in enumerate(ep.steps):
            la = st.language
            if not la.noop:
                ids = list(la.tokens)[:MAX_LANGUAGE_TOKENS] + [EOS]
                self.lg_tokens[t, :len(ids)] = ids
                self.lg_noop[t] = False

    def make_world(self):
        return generate_world(self.episode.meta.world_seed, self.episode.config)


class _Stream:
    """One batch row: walks episodes sequentially, window by window."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.prep: PreparedEpisode | None = None
        self.world = None
        self.tick = 0

    def start_episode(self, prep: PreparedEpisode, period: int) -> None:
        self.prep = prep
        self.world = prep.make_world()
        self.tick = 0
        offset = int(self.rng.integers(period))
        for _ in range(min(offset, prep.T)):
            step_inplace(self.world, prep.episode.steps[self.tick].movement)
            self.tick += 1


class BatchSource:
    """Cycles through episodes with B parallel streams; emits [B, K] windows.

    Deterministic in (episodes order, seed). Reshuffles and increments the
    epoch counter when the episode queue empties.
    """

    def __init__(self, dataset_or_episodes, tokenizer: Tokenizer,
                 config: BatchConfig, seed: int = 0,
                 period: int = HIERARCHY_PERIOD):
        if isinstance(dataset_or_episodes, Dataset):
            episodes = dataset_or_episodes.episodes("train")
        else:
            episodes = list(dataset_or_episodes)
        if not episodes:
            raise ValueError("empty dataset")
        self.preps = [PreparedEpisode(ep, tokenizer) for ep in episodes]
        self.config = config
        self.period = period
        self.rng = np.random.default_rng(seed)
        self.epoch = 0
        self._queue: list[int] = []
        self.streams = [_Stream(np.random.default_rng(seed * 977 + 13 * i + 1))
                        for i in range(config.B)]

    def _next_episode(self) -> PreparedEpisode:
        if not self._queue:
            self._queue = list(self.rng.permutation(len(self.preps)))
            self.epoch += 1
        return self.preps[self._queue.pop()]

    def next_batch(self) -> dict:
        B, K, P = self.config.B, self.config.K, self.period
        ep0 = next(iter(self.preps))
        cfg = ep0.episode.config
        h, w = cfg.raster_height, cfg.raster_width
        batch = {
            "pixels": np.zeros((B, K, h, w, 3), dtype=np.float32),
            "lang_obs": np.zeros((B, K, LANG_OBS_LEN), dtype=np.int32),
            "lang_has": np.zeros((B, K), dtype=bool),
            "mv_move": np.zeros((B, K, P, 2), dtype=np.int64),
            "mv_look": np.zeros((B, K, P, 2), dtype=np.int64),
            "mv_rot": np.zeros((B, K, P, 3, 3), dtype=np.int64),
            "mv_pp": np.zeros((B, K, P, 3), dtype=np.int64),
            "mv_grab": np.zeros((B, K, P), dtype=np.int64),
            "mv_noop": np.zeros((B, K, P), dtype=np.int64),
            "mv_mask": np.zeros((B, K, P), dtype=bool),
            "lg_tokens": np.zeros((B, K, LANG_TGT_LEN), dtype=np.int64),
            "lg_noop": np.ones((B, K), dtype=np.int64),
            "step_mask": np.zeros((B, K), dtype=bool),
            "reset": np.zeros(B, dtype=bool),
            "epoch": self.epoch,
        }
        for b, stream in enumerate(self.streams):
            if stream.prep is None or stream.tick >= stream.prep.T:
                stream.start_episode(self._next_episode(), P)
                batch["reset"][b] = True
            prep = stream.prep
            for k in range(K):
                if stream.tick >= prep.T:
                    break  # pad the rest; next window starts a fresh episode
                t = stream.tick
                batch["pixels"][b, k] = render(stream.world).astype(np.float32) / 255.0
                batch["lang_obs"][b, k] = prep.lang_obs[t]
                batch["lang_has"][b, k] = prep.lang_has[t]
                batch["step_mask"][b, k] = True
                # language target: first emitted utterance inside the period
                for dt in range(P):
                    tt = t + dt
                    if tt < prep.T and not prep.lg_noop[tt]:
                        batch["lg_tokens"][b, k] = prep.lg_tokens[tt]
                        batch["lg_noop"][b, k] = 0
                        break
                for dt in range(P):
                    tt = t + dt
                    if tt >= prep.T:
                        break
                    batch["mv_move"][b, k, dt] = prep.move[tt]
                    batch["mv_look"][b, k, dt] = prep.look[tt]
                    batch["mv_rot"][b, k, dt] = prep.rot[tt]
                    batch["mv_pp"][b, k, dt] = prep.pp[tt]
                    batch["mv_grab"][b, k, dt] = int(prep.grab[tt])
                    batch["mv_noop"][b, k, dt] = int(prep.noop[tt])
                    batch["mv_mask"][b, k, dt] = True
                    step_inplace(stream.world, prep.episode.steps[tt].movement)
                    stream.tick = tt + 1
        return batch


def make_minibatch(source: BatchSource) -> dict:
    return source.next_batch()


def shift_indices(B: int) -> np.ndarray:
    """Cyclic mismatch pairing: row n takes language from row (n+1) mod B."""
    if B < 2:
        raise ValueError("contrastive shift needs minibatch size >= 2")
    return (np.arange(B) + 1) % B


def contrastive_shuffle(batch: dict) -> dict:
    """Mismatched language pairing for the batch, plus the pair loss mask."""
    B = batch["lang_obs"].shape[0]
    shift = shift_indices(B)
    pair_mask = batch["lang_has"] & batch["lang_has"][shift] & batch["step_mask"] \
        & batch["step_mask"][shift]
    return {
        "shift": shift,
        "lang_obs_mismatch": batch["lang_obs"][shift],
        "pair_mask": pair_mask,
    }
