"""Word-level tokenizer with byte fallback.

Vocabulary = specials (pad, eos, word-break) + 256 byte units + up to
`max_words` whole-word units built from a corpus. Any string tokenizes via
the byte fallback; round-trips are exact up to whitespace normalization.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path

PAD = 0
EOS = 1
WORD_BREAK = 2
BYTE_BASE = 3
WORD_BASE = BYTE_BASE + 256

DEFAULT_MAX_WORDS = 512


class Tokenizer:
    def __init__(self, words: list[str]):
        self.words = list(words)
        self.word_to_id = {w: WORD_BASE + i for i, w in enumerate(self.words)}

    @property
    def vocab_size(self) -> int:
        return WORD_BASE + len(self.words)

    def tokenize(self, text: str) -> list[int]:
        ids = []
        for word in text.split():
            wid = self.word_to_id.get(word)
            if wid is not None:
                ids.append(wid)
            else:
                ids.extend(BYTE_BASE + b for b in word.encode("utf-8"))
                ids.append(WORD_BREAK)
        return ids

    def detokenize(self, ids) -> str:
        words = []
        byte_run = bytearray()

        def flush():
            nonlocal byte_run
            if byte_run:
                words.append(byte_run.decode("utf-8", errors="replace"))
                byte_run = bytearray()

        for i in ids:
            i = int(i)
            if i in (PAD, EOS):
                flush()
                if i == EOS:
                    break
                continue
            if i == WORD_BREAK:
                flush()
            elif BYTE_BASE <= i < WORD_BASE:
                byte_run.append(i - BYTE_BASE)
            elif WORD_BASE <= i < self.vocab_size:
                flush()
                words.append(self.words[i - WORD_BASE])
            else:
                raise ValueError(f"token id {i} out of vocabulary")
        flush()
        return " ".join(words)

    def to_json(self) -> str:
        return json.dumps({"version": 1, "words": self.words})

    @classmethod
    def from_json(cls, text: str) -> "Tokenizer":
        d = json.loads(text)
        if d.get("version") != 1:
            raise ValueError("unsupported tokenizer version")
        return cls(d["words"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Tokenizer":
        return cls.from_json(Path(path).read_text())

    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def build_tokenizer(corpus, max_words: int = DEFAULT_MAX_WORDS) -> Tokenizer:
    """Most frequent whitespace-separated units from an utterance corpus."""
    counts = Counter()
    for text in corpus:
        counts.update(text.split())
    words = [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]
    return Tokenizer(words[:max_words])
