"""Dataset manifest: shard list, train/validation split, nested fraction
subsampling, tokenizer binding. Manifest is versioned human-readable JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .episodes import Episode, ShardReader
from .tokenizer import Tokenizer

MANIFEST_VERSION = 1
FRACTIONS = (1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0)
VALIDATION_SHARE = 0.1


@dataclass
class BatchConfig:
    B: int = 8
    K: int = 16

    def __post_init__(self):
        if self.B < 2:
            raise ValueError("minibatch size must be >= 2 (contrastive shift)")
        if self.K < 1:
            raise ValueError("BPTT window must be >= 1")


class Dataset:
    """Episode collection behind a manifest, with deterministic nested
    fraction subsets of the training split."""

    def __init__(self, root: Path, manifest: dict):
        self.root = Path(root)
        self.manifest = manifest
        self._readers: dict[str, ShardReader] = {}

    @classmethod
    def load(cls, manifest_path) -> "Dataset":
        p = Path(manifest_path)
        m = json.loads(p.read_text())
        if m.get("version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {m.get('version')}")
        return cls(p.parent, m)

    def save(self, manifest_path) -> None:
        Path(manifest_path).write_text(json.dumps(self.manifest, indent=2))

    @property
    def tokenizer(self) -> Tokenizer:
        return Tokenizer.load(self.root / self.manifest["tokenizer"])

    def _reader(self, shard: str) -> ShardReader:
        if shard not in self._readers:
            self._readers[shard] = ShardReader(self.root / shard)
        return self._readers[shard]

    def episode(self, index: int) -> Episode:
        shard_i, rec_i = self.manifest["episodes"][index]
        return self._reader(self.manifest["shards"][shard_i]).read(rec_i)

    def __len__(self):
        return len(self.manifest["episodes"])

    def split_indices(self, split: str, fraction: float = 1.0) -> list[int]:
        idx = list(self.manifest["split"][split])
        if split != "train" or fraction >= 1.0:
            return idx
        # nested subsets: a fixed permutation truncated per fraction
        rng = np.random.default_rng(self.manifest["fraction_seed"])
        perm = rng.permutation(len(idx))
        n = int(np.floor(fraction * len(idx)))
        return [idx[i] for i in perm[:n]]

    def episodes(self, split: str, fraction: float = 1.0) -> list[Episode]:
        return [self.episode(i) for i in self.split_indices(split, fraction)]


def build_manifest(root: Path, shard_names: list[str], tokenizer_file: str,
                   tokenizer_hash: str, seed: int, mix: dict | None = None,
                   validation_share: float = VALIDATION_SHARE) -> dict:
    root = Path(root)
    episodes = []
    for si, name in enumerate(shard_names):
        reader = ShardReader(root / name)
        episodes.extend([si, ri] for ri in range(len(reader)))
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(episodes))
    n_val = max(1, int(round(validation_share * len(episodes))))
    val = sorted(int(i) for i in order[:n_val])
    train = sorted(int(i) for i in order[n_val:])
    return {
        "version": MANIFEST_VERSION,
        "shards": shard_names,
        "episodes": episodes,
        "split": {"train": train, "validation": val},
        "fraction_seed": seed + 1,
        "tokenizer": tokenizer_file,
        "tokenizer_hash": tokenizer_hash,
        "mix": mix or {},
        "seed": seed,
    }
