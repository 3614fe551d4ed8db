"""Nearest-neighbour systems assembled from the encoders, the inverted index
and the k-d tree, all driven by one flat configuration record."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingCorpus
from .encoders import (
    FakeWordsConfig,
    LexicalLshConfig,
    encode_fake_words,
    encode_lexical_lsh,
    normalize,
)
from . import storage
from .errors import ConfigError, IndexFormatError
from .index import InvertedIndex, TermDocument
from .kdtree import KdTree
from .reduction import MAX_KD_DIMS, PIPELINES, reduce

ENCODERS = ("fake-words", "lexical-lsh", "kd-tree")

# tuned on 10k-word, 300-d collections; fake-word terms each occur in a large
# share of documents, so any cutoff much below 0.5 discards the whole query
TUNED_DF_CUTOFF = {"fake-words": 1.0, "lexical-lsh": 0.3, "kd-tree": 1.0}


@dataclass(frozen=True)
class MethodConfig:
    """Every tunable of every method; fields irrelevant to ``encoder`` are ignored.

    ``df_cutoff`` defaults to a per-encoder value from :data:`TUNED_DF_CUTOFF`.
    ``normalize`` applies to lexical LSH only: vectors are scaled to unit
    length before rounding, so that the quantized tokens reflect direction
    (cosine) rather than magnitude. Fake words always normalize.
    """

    encoder: str = "fake-words"
    q: int = 50
    n: int = 1
    h: int = 1
    b: int = 300
    decimals: int = 1
    df_cutoff: float | None = None
    normalize: bool = True
    pipeline: str = "pca"
    p: int = 8
    ppa_d: int = 7
    rerank: bool = False

    def __post_init__(self):
        if self.encoder not in ENCODERS:
            raise ConfigError(f"unknown encoder {self.encoder!r}; expected one of {ENCODERS}")
        if self.df_cutoff is None:
            object.__setattr__(self, "df_cutoff", TUNED_DF_CUTOFF[self.encoder])
        if not 0.0 < self.df_cutoff <= 1.0:
            raise ConfigError(f"df_cutoff must lie in (0, 1], got {self.df_cutoff}")
        # validate eagerly so a bad grid fails before any indexing work
        if self.encoder == "fake-words":
            self.fake_words
        elif self.encoder == "lexical-lsh":
            self.lexical_lsh
        elif self.pipeline not in PIPELINES or not 1 <= self.p <= MAX_KD_DIMS or self.ppa_d < 1:
            raise ConfigError(f"bad k-d tree settings pipeline={self.pipeline!r} p={self.p} ppa_d={self.ppa_d}")

    @classmethod
    def from_dict(cls, data: dict) -> "MethodConfig":
        known = {f.name for f in fields(cls)}
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = {"encoder": self.encoder}
        if self.encoder == "fake-words":
            keys = ("q", "df_cutoff")
        elif self.encoder == "lexical-lsh":
            keys = ("b", "h", "n", "decimals", "normalize", "df_cutoff")
        else:
            keys = ("pipeline", "p", "ppa_d")
        out.update({k: getattr(self, k) for k in keys})
        if self.rerank:
            out["rerank"] = True
        return out

    @property
    def fake_words(self) -> FakeWordsConfig:
        return FakeWordsConfig(self.q)

    @property
    def lexical_lsh(self) -> LexicalLshConfig:
        return LexicalLshConfig(n=self.n, h=self.h, b=self.b, decimals=self.decimals)

    @property
    def label(self) -> str:
        if self.encoder == "fake-words":
            text = f"fake words q={self.q}"
        elif self.encoder == "lexical-lsh":
            text = f"lexical LSH b={self.b}, h={self.h}, n={self.n}"
        else:
            text = f"k-d tree {self.pipeline}"
        return text + (" +rerank" if self.rerank else "")


def encode(config: MethodConfig, vector) -> dict[str, int]:
    """Term multiset for one raw vector under a term-based method."""
    if config.encoder == "fake-words":
        return encode_fake_words(normalize(vector), config.fake_words)
    if config.encoder == "lexical-lsh":
        if config.normalize:
            vector = normalize(vector)
        return encode_lexical_lsh(vector, config.lexical_lsh)
    raise ConfigError(f"{config.encoder} does not produce terms")


class TermSearcher:
    """Fake-words or lexical-LSH retrieval over an :class:`InvertedIndex`."""

    def __init__(self, config: MethodConfig, index: InvertedIndex, vectors=None):
        self.config = config
        self.index = index
        self.vectors = vectors

    @classmethod
    def build(cls, config: MethodConfig, corpus: EmbeddingCorpus) -> "TermSearcher":
        index = InvertedIndex(metadata={"dimension": corpus.dim, "method": config.to_dict()})
        for doc_id, vec in enumerate(corpus.vectors):
            index.add_document(TermDocument(doc_id, encode(config, vec)))
        index.finalize()
        return cls(config, index, corpus.vectors)

    def search(self, vector, depth: int) -> list[tuple[int, float]]:
        result = self.index.search(encode(self.config, vector), depth, self.config.df_cutoff)
        ranked = result.ranked
        if self.config.rerank and self.vectors is not None:
            ranked = rerank_by_cosine(self.vectors, vector, [d for d, _ in ranked])
        return ranked

    def index_size_bytes(self) -> int:
        return self.index.index_size_bytes()

    def to_bytes(self) -> bytes:
        return self.index.to_bytes()


class KdTreeSearcher:
    """Dimensionality reduction followed by exact k-d tree search."""

    def __init__(self, config: MethodConfig, tree: KdTree, model, vectors=None):
        self.config = config
        self.tree = tree
        self.model = model
        self.vectors = vectors

    @classmethod
    def build(cls, config: MethodConfig, corpus: EmbeddingCorpus) -> "KdTreeSearcher":
        model, reduced = reduce(corpus.vectors, config.pipeline, config.p, config.ppa_d)
        return cls(config, KdTree(reduced), model, corpus.vectors)

    def search(self, vector, depth: int) -> list[tuple[int, float]]:
        ranked = self.tree.knn(self.model.transform_one(vector), depth)
        if self.config.rerank and self.vectors is not None:
            ranked = rerank_by_cosine(self.vectors, vector, [d for d, _ in ranked])
        return ranked

    def index_size_bytes(self) -> int:
        return len(self.to_bytes())

    def to_bytes(self) -> bytes:
        metadata = {"dimension": self.model.input_dim, "method": self.config.to_dict()}
        return self.tree.to_bytes(self.model, metadata)


def build_searcher(config: MethodConfig, corpus: EmbeddingCorpus):
    if config.encoder == "kd-tree":
        return KdTreeSearcher.build(config, corpus)
    return TermSearcher.build(config, corpus)


def rerank_by_cosine(vectors: np.ndarray, query, doc_ids: list[int]) -> list[tuple[int, float]]:
    """Reorder candidates by exact cosine similarity to ``query``."""
    if not doc_ids:
        return []
    cand = vectors[doc_ids]
    sims = cand @ np.asarray(query, dtype=np.float64)
    sims /= np.linalg.norm(cand, axis=1) * np.linalg.norm(query)
    order = np.lexsort((np.asarray(doc_ids), -sims))
    return [(doc_ids[i], float(sims[i])) for i in order]



def load_searcher(path):
    """Reopen an index file written by a searcher's ``to_bytes``."""
    data = Path(path).read_bytes()
    header, _, _ = storage.decode_container(data)
    if header.get("kind") == "kdtree":
        tree, model, metadata = KdTree.from_bytes(data)
        if model is None:
            raise IndexFormatError("k-d tree index lacks its projection model", len(data))
        return KdTreeSearcher(MethodConfig.from_dict(metadata.get("method", {"encoder": "kd-tree"})), tree, model)
    index = InvertedIndex.from_bytes(data)
    return TermSearcher(MethodConfig.from_dict(index.metadata.get("method", {})), index)
