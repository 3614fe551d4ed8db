"""Word-embedding corpora and their text file formats.

``glove-text``
    One entry per line: ``word f1 f2 ... fm`` separated by single spaces.
    ``m`` is taken from the first line.
``word2vec-text``
    A header line ``<count> <dim>`` followed by lines in the GloVe layout.
    The number of body lines must equal ``count``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmbeddingFormatError

log = logging.getLogger(__name__)

FORMATS = ("glove-text", "word2vec-text")


@dataclass
class EmbeddingCorpus:
    words: list[str]
    vectors: np.ndarray
    source_format: str = "glove-text"
    duplicates_skipped: int = 0
    _ids: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or len(self.vectors) != len(self.words):
            raise ValueError("vectors must be an (n, m) array with one row per word")
        self._ids = {}
        for i, word in enumerate(self.words):
            if word in self._ids:
                raise ValueError(f"duplicate word {word!r}")
            self._ids[word] = i

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self._ids

    def id_of(self, word: str) -> int:
        return self._ids[word]

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self._ids[word]]

    def subset(self, limit: int) -> "EmbeddingCorpus":
        return EmbeddingCorpus(self.words[:limit], self.vectors[:limit], self.source_format)


def _parse_line(line: str, lineno: int, dim: int | None):
    parts = line.rstrip("\r\n").rstrip(" ").split(" ")
    if dim is None:
        dim = len(parts) - 1
        if dim < 1:
            raise EmbeddingFormatError("entry has no vector components", lineno)
    if len(parts) != dim + 1:
        raise EmbeddingFormatError(f"expected {dim} components, found {len(parts) - 1}", lineno)
    try:
        values = [float(x) for x in parts[1:]]
    except ValueError as exc:
        raise EmbeddingFormatError(f"bad number: {exc}", lineno) from None
    return parts[0], values, dim


def load_embeddings(path, format: str = "glove-text", limit: int | None = None) -> EmbeddingCorpus:
    """Read an embedding text file, keeping the first ``limit`` distinct words."""
    if format not in FORMATS:
        raise EmbeddingFormatError(f"unknown format {format!r}; expected one of {FORMATS}")
    if limit is not None and limit < 1:
        raise EmbeddingFormatError(f"limit must be positive, got {limit}")
    words, rows = [], []
    seen = set()
    duplicates = 0
    dim = None
    declared = None
    body_lines = 0
    truncated = False
    with open(path, encoding="utf-8") as fh:
        lineno = 0
        if format == "word2vec-text":
            first = fh.readline()
            lineno = 1
            if not first.strip():
                raise EmbeddingFormatError("empty file", 1)
            try:
                declared, dim = (int(x) for x in first.split())
            except ValueError:
                raise EmbeddingFormatError(f"bad header {first.strip()!r}; expected '<count> <dim>'", 1) from None
        for line in fh:
            lineno += 1
            if not line.strip():
                continue
            if limit is not None and len(words) >= limit:
                truncated = True
                break
            body_lines += 1
            word, values, dim = _parse_line(line, lineno, dim)
            if word in seen:
                duplicates += 1
                continue
            seen.add(word)
            words.append(word)
            rows.append(values)
    if not words:
        raise EmbeddingFormatError("empty file" if lineno <= 1 else "no embedding entries", None)
    if declared is not None and not truncated and body_lines != declared:
        raise EmbeddingFormatError(f"header declares {declared} entries but the file has {body_lines}")
    if duplicates:
        log.warning("%s: skipped %d duplicate words", path, duplicates)
    return EmbeddingCorpus(words, np.array(rows, dtype=np.float64), format, duplicates)


def write_embeddings(corpus: EmbeddingCorpus, path, format: str = "glove-text") -> None:
    if format not in FORMATS:
        raise EmbeddingFormatError(f"unknown format {format!r}")
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        if format == "word2vec-text":
            fh.write(f"{len(corpus)} {corpus.dim}\n")
        for word, vec in zip(corpus.words, corpus.vectors):
            fh.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")
