"""In-memory inverted index with tf-idf ranked retrieval.

Scoring follows the rank-relevant part of the classic Lucene similarity::

    score(q, d) = sum over t in q∩d of  qf(t) * sqrt(freq(t, d)) * idf(t)**2 / sqrt(len(d))
    idf(t)      = 1 + ln(N / (df(t) + 1))

There is no query norm and no coordination factor. Query terms are summed
in sorted order on every code path, so the exhaustive scorer and the
postings-driven search produce bit-identical floats.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import storage
from .errors import (
    DuplicateDocumentError,
    FrozenIndexError,
    IndexFormatError,
    UnknownDocumentError,
)

DEFAULT_DF_CUTOFF = 0.1

_I8 = np.dtype("<i8")
_U4 = np.dtype("<u4")


@dataclass
class TermDocument:
    """A document id plus the multiset of terms an encoder produced for it."""

    doc_id: int
    terms: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.doc_id) != self.doc_id or self.doc_id < 0:
            raise ValueError(f"doc_id must be a non-negative integer, got {self.doc_id!r}")
        self.doc_id = int(self.doc_id)
        self.terms = as_term_counts(self.terms)

    def __len__(self):
        return sum(self.terms.values())


@dataclass(frozen=True)
class SearchResult:
    """Ranked (doc_id, score) pairs, best first, ties by ascending doc_id."""

    ranked: list[tuple[int, float]]

    @property
    def doc_ids(self) -> list[int]:
        return [doc_id for doc_id, _ in self.ranked]

    @property
    def scores(self) -> list[float]:
        return [score for _, score in self.ranked]

    def __len__(self):
        return len(self.ranked)

    def __iter__(self):
        return iter(self.ranked)

    def __getitem__(self, item):
        return self.ranked[item]


def as_term_counts(terms) -> dict[str, int]:
    """Coerce a mapping or an iterable of terms into ``{term: freq}``."""
    if isinstance(terms, Mapping):
        counts = {}
        for term, freq in terms.items():
            if not isinstance(term, str):
                raise TypeError(f"terms must be strings, got {term!r}")
            if int(freq) != freq or freq < 1:
                raise ValueError(f"term {term!r} has invalid frequency {freq!r}")
            counts[term] = int(freq)
        return counts
    if isinstance(terms, (str, bytes)):
        raise TypeError("pass an iterable of terms, not a single string")
    return as_term_counts(Counter(terms))


def idf(n_docs: int, df: int) -> float:
    return 1.0 + math.log(n_docs / (df + 1))


def term_weight(freq: int) -> float:
    return math.sqrt(freq)


def length_norm(doc_len: int) -> float:
    return 1.0 / math.sqrt(doc_len) if doc_len > 0 else 0.0


class InvertedIndex:
    """Term -> postings map with corpus statistics.

    Documents are added one at a time; the first search (or an explicit
    :meth:`finalize`) compiles postings into numpy arrays and freezes the
    index. Loaded indexes are frozen from the start. A frozen index is safe
    to search from several threads at once.
    """

    def __init__(self, metadata: dict | None = None):
        self.metadata = dict(metadata or {})
        self._postings: dict[str, list[tuple[int, int]]] = {}
        self._doc_len: dict[int, int] = {}
        self._frozen = False
        self._compiled = None
        self._size = None

    # -- construction -------------------------------------------------

    def add_document(self, doc: TermDocument) -> "InvertedIndex":
        if self._frozen:
            raise FrozenIndexError("cannot add documents to a finalized index")
        if doc.doc_id in self._doc_len:
            raise DuplicateDocumentError(doc.doc_id)
        self._doc_len[doc.doc_id] = sum(doc.terms.values())
        for term, freq in doc.terms.items():
            self._postings.setdefault(term, []).append((doc.doc_id, freq))
        return self

    def add_documents(self, docs: Iterable[TermDocument]) -> "InvertedIndex":
        for doc in docs:
            self.add_document(doc)
        return self

    def finalize(self) -> "InvertedIndex":
        if self._compiled is None:
            for plist in self._postings.values():
                plist.sort()
            self._compiled = _Compiled.build(self._postings, self._doc_len)
            self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    # -- statistics ---------------------------------------------------

    @property
    def N(self) -> int:
        return len(self._doc_len)

    def __len__(self):
        return self.N

    def __contains__(self, doc_id):
        return doc_id in self._doc_len

    @property
    def doc_ids(self) -> list[int]:
        return sorted(self._doc_len)

    @property
    def vocabulary(self) -> list[str]:
        return sorted(self._postings)

    def df(self, term: str) -> int:
        return len(self._postings.get(term, ()))

    def doc_len(self, doc_id: int) -> int:
        try:
            return self._doc_len[doc_id]
        except KeyError:
            raise UnknownDocumentError(doc_id) from None

    def postings(self, term: str) -> list[tuple[int, int]]:
        plist = self._postings.get(term, [])
        if not self._frozen:
            plist.sort()
        return list(plist)

    # -- scoring ------------------------------------------------------

    def tf_idf_score(self, query, doc_id: int) -> float:
        """Score one document exhaustively, without consulting the compiled postings."""
        doc_len = self.doc_len(doc_id)
        counts = as_term_counts(query)
        n_docs = self.N
        score = 0.0
        for term in sorted(counts):
            plist = self._postings.get(term)
            if not plist:
                continue
            freq = _lookup_freq(plist, doc_id)
            if freq:
                w = idf(n_docs, len(plist))
                score += counts[term] * term_weight(freq) * (w * w) * length_norm(doc_len)
        return score

    def search(self, query, depth: int, df_cutoff: float = DEFAULT_DF_CUTOFF) -> SearchResult:
        """Top-``depth`` documents for a term multiset.

        Query terms whose document frequency exceeds ``df_cutoff * N`` are
        dropped before scoring. Documents sharing no surviving term with the
        query are never returned.
        """
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        if not 0.0 < df_cutoff <= 1.0:
            raise ValueError(f"df_cutoff must lie in (0, 1], got {df_cutoff}")
        compiled = self.finalize()._compiled
        counts = as_term_counts(query)
        limit = df_cutoff * self.N
        scores = None
        for term in sorted(counts):
            entry = compiled.postings.get(term)
            if entry is None:
                continue
            rows, tf = entry
            if len(rows) > limit:
                continue
            w = idf(self.N, len(rows))
            contrib = counts[term] * tf * (w * w) * compiled.norm[rows]
            if scores is None:
                scores = np.zeros(self.N)
                touched = np.zeros(self.N, dtype=bool)
            scores[rows] += contrib
            touched[rows] = True
        if scores is None:
            return SearchResult([])
        cand = np.flatnonzero(touched)
        order = np.lexsort((cand, -scores[cand]))[:depth]
        best = cand[order]
        ids = compiled.row_ids[best].tolist()
        return SearchResult(list(zip(ids, scores[best].tolist())))

    # -- persistence --------------------------------------------------

    def to_bytes(self) -> bytes:
        self.finalize()
        header = {"kind": "inverted", "N": self.N, "num_terms": len(self._postings),
                  "metadata": self.metadata}
        return storage.encode_container(header, self._sections())

    def _sections(self) -> dict[str, bytes]:
        ids = np.array(sorted(self._doc_len), dtype=_I8)
        lens = np.array([self._doc_len[i] for i in ids.tolist()], dtype=_I8)
        parts = [struct.pack("<I", len(self._postings))]
        for term in sorted(self._postings):
            raw = term.encode("utf-8")
            plist = self._postings[term]
            parts.append(struct.pack("<II", len(raw), len(plist)))
            parts.append(raw)
            parts.append(np.array([d for d, _ in plist], dtype=_I8).tobytes())
            parts.append(np.array([f for _, f in plist], dtype=_U4).tobytes())
        return {"docs": ids.tobytes() + lens.tobytes(), "postings": b"".join(parts)}

    def persist(self, path) -> int:
        """Write the index to ``path``; returns the number of bytes written."""
        blob = self.to_bytes()
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(blob)
        tmp.replace(path)
        self._size = len(blob)
        return self._size

    def index_size_bytes(self) -> int:
        """Size of the persisted form, identical to the file :meth:`persist` writes."""
        if self._size is None or not self._frozen:
            self._size = len(self.to_bytes())
        return self._size

    @classmethod
    def from_bytes(cls, data: bytes) -> "InvertedIndex":
        header, sections, offsets = storage.decode_container(data)
        if header.get("kind") != "inverted":
            raise IndexFormatError(f"expected an inverted index, found kind={header.get('kind')!r}", 16)
        for name in ("docs", "postings"):
            if name not in sections:
                raise IndexFormatError(f"missing {name!r} section", len(data))
        n_docs = header.get("N")
        if not isinstance(n_docs, int) or n_docs < 0:
            raise IndexFormatError(f"bad document count {n_docs!r}", 16)

        docs = storage.SectionReader(sections["docs"], offsets["docs"], "docs")
        ids = np.frombuffer(docs.take(8 * n_docs), dtype=_I8)
        lens = np.frombuffer(docs.take(8 * n_docs), dtype=_I8)
        docs.finish()
        if n_docs and (ids[0] < 0 or np.any(np.diff(ids) <= 0)):
            raise IndexFormatError("document ids not strictly ascending", offsets["docs"])

        index = cls(metadata=header.get("metadata") or {})
        index._doc_len = dict(zip(ids.tolist(), lens.tolist()))
        known = set(index._doc_len)
        totals = Counter()
        reader = storage.SectionReader(sections["postings"], offsets["postings"], "postings")
        (n_terms,) = reader.unpack("<I")
        for _ in range(n_terms):
            start = reader.offset()
            n_raw, df = reader.unpack("<II")
            try:
                term = bytes(reader.take(n_raw)).decode("utf-8")
            except UnicodeDecodeError:
                raise IndexFormatError("term is not valid UTF-8", start + 8) from None
            doc_ids = np.frombuffer(reader.take(8 * df), dtype=_I8).tolist()
            freqs = np.frombuffer(reader.take(4 * df), dtype=_U4).tolist()
            if term in index._postings or df == 0:
                raise IndexFormatError(f"duplicate or empty postings list for {term!r}", start)
            if any(b <= a for a, b in zip(doc_ids, doc_ids[1:])) or not known.issuperset(doc_ids):
                raise IndexFormatError(f"postings for {term!r} are unsorted or reference unknown ids", start)
            if min(freqs) < 1:
                raise IndexFormatError(f"zero frequency in postings for {term!r}", start)
            index._postings[term] = list(zip(doc_ids, freqs))
            totals.update(dict(zip(doc_ids, freqs)))
        reader.finish()
        if n_terms != header.get("num_terms"):
            raise IndexFormatError("term count disagrees with header", offsets["postings"])
        for doc_id, doc_len in index._doc_len.items():
            if totals.get(doc_id, 0) != doc_len:
                raise IndexFormatError(f"document {doc_id} length disagrees with its postings",
                                       offsets["docs"])
        index.finalize()
        index._size = len(data)
        return index

    @classmethod
    def load(cls, path) -> "InvertedIndex":
        return cls.from_bytes(Path(path).read_bytes())


def _lookup_freq(plist, doc_id):
    # plist sorted by doc id once frozen; tolerate unsorted during construction
    for d, f in plist:
        if d == doc_id:
            return f
    return 0


class _Compiled:
    """Numpy view of the postings, rows ordered by ascending doc id."""

    def __init__(self, row_ids, norm, postings):
        self.row_ids = row_ids
        self.norm = norm
        self.postings = postings

    @classmethod
    def build(cls, postings, doc_len):
        row_ids = np.array(sorted(doc_len), dtype=np.int64)
        row_of = {doc_id: row for row, doc_id in enumerate(row_ids.tolist())}
        lens = np.array([doc_len[d] for d in row_ids.tolist()], dtype=np.float64)
        norm = np.zeros(len(row_ids))
        nonempty = lens > 0
        norm[nonempty] = 1.0 / np.sqrt(lens[nonempty])
        compiled = {}
        for term, plist in postings.items():
            rows = np.fromiter((row_of[d] for d, _ in plist), dtype=np.int64, count=len(plist))
            tf = np.sqrt(np.fromiter((f for _, f in plist), dtype=np.float64, count=len(plist)))
            compiled[term] = (rows, tf)
        return cls(row_ids, norm, compiled)


def add_document(index: InvertedIndex, doc: TermDocument) -> InvertedIndex:
    return index.add_document(doc)


def tf_idf_score(index: InvertedIndex, query, doc_id: int) -> float:
    return index.tf_idf_score(query, doc_id)


def search(index: InvertedIndex, query, depth: int, df_cutoff: float = DEFAULT_DF_CUTOFF) -> SearchResult:
    return index.search(query, depth, df_cutoff)


def persist(index: InvertedIndex, path) -> int:
    return index.persist(path)


def load(path) -> InvertedIndex:
    return InvertedIndex.load(path)


def index_size_bytes(index: InvertedIndex) -> int:
    return index.index_size_bytes()
