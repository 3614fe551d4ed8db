"""Approximate nearest-neighbour search on dense vectors using inverted indexes.

Three routes are implemented: "fake words" term-frequency encoding, lexical
LSH over quantized feature tokens, and exact k-d tree search after
dimensionality reduction, together with a recall@(k, d) evaluation harness.
"""

from .embeddings import EmbeddingCorpus, load_embeddings, write_embeddings
from .encoders import (
    FakeWordsConfig,
    LexicalLshConfig,
    encode_fake_words,
    encode_lexical_lsh,
    minhash,
    ngrams,
    normalize,
    quantize_and_tag,
)
from .errors import (
    DuplicateDocumentError,
    EmbeddingFormatError,
    EncodingError,
    EvaluationError,
    IndexFormatError,
    LexannError,
    UnknownDocumentError,
)
from .evaluation import RecallReport, brute_force_topk, recall_at, run_eval, sweep
from .index import InvertedIndex, SearchResult, TermDocument
from .kdtree import KdTree, kdtree_build, kdtree_knn
from .methods import MethodConfig, build_searcher, load_searcher
from .reduction import ProjectionModel, pca_fit, ppa, reduce

__version__ = "0.1.0"

__all__ = [
    "DuplicateDocumentError", "EmbeddingCorpus", "EmbeddingFormatError", "EncodingError",
    "EvaluationError", "FakeWordsConfig", "IndexFormatError", "InvertedIndex", "KdTree",
    "LexannError", "LexicalLshConfig", "MethodConfig", "ProjectionModel", "RecallReport",
    "SearchResult", "TermDocument", "UnknownDocumentError", "brute_force_topk", "build_searcher",
    "encode_fake_words", "encode_lexical_lsh", "kdtree_build", "kdtree_knn", "load_embeddings",
    "load_searcher", "minhash", "ngrams", "normalize", "pca_fit", "ppa", "quantize_and_tag",
    "recall_at", "reduce", "run_eval", "sweep", "write_embeddings",
]
