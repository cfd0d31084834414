"""Episode storage, tokenization, dataset manifests, and minibatch assembly."""

from .batching import (
    HIERARCHY_PERIOD,
    LANG_OBS_LEN,
    LANG_TGT_LEN,
    BatchSource,
    PreparedEpisode,
    contrastive_shuffle,
    make_minibatch,
    shift_indices,
)
from .dataset import (
    FRACTIONS,
    MANIFEST_VERSION,
    BatchConfig,
    Dataset,
    build_manifest,
)
from .episodes import (
    Episode,
    EpisodeMeta,
    EpisodeStep,
    ShardError,
    ShardReader,
    ShardWriter,
    UtteranceEvent,
    read_episode,
    sticky_language,
    write_episode,
)
from .tokenizer import (
    BYTE_BASE,
    EOS,
    PAD,
    WORD_BASE,
    WORD_BREAK,
    Tokenizer,
    build_tokenizer,
)

__all__ = [
    "HIERARCHY_PERIOD", "LANG_OBS_LEN", "LANG_TGT_LEN", "BatchSource",
    "PreparedEpisode", "contrastive_shuffle", "make_minibatch",
    "shift_indices", "FRACTIONS", "MANIFEST_VERSION", "BatchConfig",
    "Dataset", "build_manifest", "Episode", "EpisodeMeta", "EpisodeStep",
    "ShardError", "ShardReader", "ShardWriter", "UtteranceEvent",
    "read_episode", "sticky_language", "write_episode", "BYTE_BASE", "EOS",
    "PAD", "WORD_BASE", "WORD_BREAK", "Tokenizer", "build_tokenizer",
]
