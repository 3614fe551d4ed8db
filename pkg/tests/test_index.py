import math
import os
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lexann import index as ix
from lexann.errors import DuplicateDocumentError, FrozenIndexError, IndexFormatError, UnknownDocumentError
from lexann.index import InvertedIndex, TermDocument

from conftest import exhaustive_ranking, random_index, random_query


def test_single_insertion_statistics():
    idx = ix.add_document(InvertedIndex(), TermDocument(0, {"a": 2}))
    assert idx.N == 1 and idx.df("a") == 1 and idx.doc_len(0) == 2


def test_duplicate_id_rejected():
    idx = InvertedIndex().add_document(TermDocument(0, {"a": 1}))
    with pytest.raises(DuplicateDocumentError):
        idx.add_document(TermDocument(0, {"b": 1}))


def test_shared_term_postings_sorted():
    idx = InvertedIndex()
    for d in (7, 2, 5):
        idx.add_document(TermDocument(d, {"x": d}))
    assert idx.df("x") == 3
    assert idx.postings("x") == [(2, 2), (5, 5), (7, 7)]


def test_term_document_validation():
    with pytest.raises(ValueError):
        TermDocument(0, {"a": 0})
    assert len(TermDocument(3, {})) == 0


def test_empty_document_is_indexed_but_unretrievable():
    idx = InvertedIndex().add_documents([TermDocument(0, {}), TermDocument(1, {"a": 1})])
    assert idx.N == 2 and idx.doc_len(0) == 0
    assert idx.search({"a": 1}, 10, 1.0).doc_ids == [1]


def test_frozen_after_finalize():
    idx = InvertedIndex().add_document(TermDocument(0, {"a": 1})).finalize()
    with pytest.raises(FrozenIndexError):
        idx.add_document(TermDocument(1, {"a": 1}))


def test_formula_examples():
    assert ix.idf(100, 9) == pytest.approx(1 + math.log(10))
    assert ix.idf(100, 9) == pytest.approx(3.3026, abs=1e-4)
    assert ix.term_weight(4) == 2.0


def test_single_document_score():
    idx = InvertedIndex().add_document(TermDocument(0, {"t": 1}))
    expected = (1 + math.log(0.5)) ** 2
    assert idx.tf_idf_score({"t": 1}, 0) == pytest.approx(expected)
    assert expected > 0
    assert ix.search(idx, {"t": 1}, 1, 1.0).doc_ids == [0]


def test_score_errors_and_absent_terms():
    idx = InvertedIndex().add_document(TermDocument(0, {"t": 1}))
    with pytest.raises(UnknownDocumentError):
        idx.tf_idf_score({"t": 1}, 9)
    assert idx.tf_idf_score({"zzz": 3}, 0) == 0.0
    with pytest.raises(ValueError):
        idx.search({"t": 1}, 0)


def test_single_holder_term():
    idx = InvertedIndex().add_documents(TermDocument(i, {f"u{i}": 1, "c": 1}) for i in range(5))
    res = idx.search({"u3": 1}, 5, 1.0)
    assert res.doc_ids == [3] and len(res) == 1


def test_df_cutoff_drops_common_term():
    idx = InvertedIndex().add_documents(
        TermDocument(i, {"common": 1} if i < 6 else {"rare": 1}) for i in range(10))
    assert len(idx.search({"common": 1}, 10, df_cutoff=0.5)) == 0
    assert len(idx.search({"common": 1}, 10, df_cutoff=0.6)) == 6
    # filtered terms vanish entirely; the surviving term alone decides
    assert idx.search({"common": 5, "rare": 1}, 10, 0.5).doc_ids == [6, 7, 8, 9]


def test_search_matches_exhaustive_oracle_200_docs(rng):
    idx = random_index(rng, 200)
    for _ in range(50):
        q = random_query(rng)
        got = idx.search(q, 200, 1.0).ranked
        assert got == exhaustive_ranking(idx, q)


def test_sparse_ids_and_ties():
    idx = InvertedIndex().add_documents(TermDocument(d, {"a": 1}) for d in (40, 3, 17))
    res = idx.search({"a": 1}, 3, 1.0)
    assert res.doc_ids == [3, 17, 40]
    assert len(set(res.scores)) == 1


index_docs = st.lists(
    st.dictionaries(st.sampled_from([f"t{i}" for i in range(12)]), st.integers(1, 6), max_size=6),
    min_size=1, max_size=30)
queries = st.dictionaries(st.sampled_from([f"t{i}" for i in range(14)]), st.integers(1, 4), min_size=1, max_size=5)


def _build(docs):
    return InvertedIndex().add_documents(TermDocument(i, t) for i, t in enumerate(docs)).finalize()


@settings(max_examples=80, deadline=None)
@given(index_docs, queries)
def test_property_search_equals_exhaustive(docs, query):
    idx = _build(docs)
    assert idx.search(query, idx.N, 1.0).ranked == exhaustive_ranking(idx, query)


@settings(max_examples=60, deadline=None)
@given(index_docs, queries, st.integers(1, 30), st.integers(1, 30))
def test_property_prefix_monotonic_in_depth(docs, query, d1, d2):
    d1, d2 = sorted((d1, d2))
    idx = _build(docs)
    assert idx.search(query, d2, 1.0).ranked[:d1] == idx.search(query, d1, 1.0).ranked


@settings(max_examples=60, deadline=None)
@given(index_docs, queries)
def test_property_query_scaling(docs, query):
    idx = _build(docs)
    base = idx.search(query, idx.N, 1.0)
    doubled = idx.search({t: 2 * f for t, f in query.items()}, idx.N, 1.0)
    assert doubled.doc_ids == base.doc_ids
    assert np.allclose(doubled.scores, [2 * s for s in base.scores], rtol=1e-12, atol=0)


@settings(max_examples=60, deadline=None)
@given(index_docs)
def test_property_structural_invariants(docs):
    idx = _build(docs)
    totals = {}
    for term in idx.vocabulary:
        plist = idx.postings(term)
        assert idx.df(term) == len(plist)
        assert [d for d, _ in plist] == sorted({d for d, _ in plist})
        for d, f in plist:
            assert f >= 1
            totals[d] = totals.get(d, 0) + f
    for d in idx.doc_ids:
        assert totals.get(d, 0) == idx.doc_len(d)


@settings(max_examples=40, deadline=None)
@given(index_docs, queries)
def test_property_roundtrip_bit_exact(docs, query):
    idx = _build(docs)
    again = InvertedIndex.from_bytes(idx.to_bytes())
    assert again.search(query, idx.N, 1.0).ranked == idx.search(query, idx.N, 1.0).ranked


def test_persist_roundtrip_three_docs(tmp_path, rng):
    idx = random_index(rng, 3, vocab=6)
    path = tmp_path / "three.idx"
    assert ix.persist(idx, path) == path.stat().st_size
    loaded = ix.load(path)
    for _ in range(10):
        q = random_query(rng, vocab=6)
        assert loaded.search(q, 3, 1.0).ranked == idx.search(q, 3, 1.0).ranked


def test_empty_index_roundtrip(tmp_path):
    path = tmp_path / "empty.idx"
    InvertedIndex(metadata={"dimension": 3}).persist(path)
    loaded = InvertedIndex.load(path)
    assert loaded.N == 0 and loaded.metadata == {"dimension": 3}
    assert len(loaded.search({"a": 1}, 5, 1.0)) == 0


def test_size_matches_filesystem_10k(tmp_path, rng):
    idx = random_index(rng, 10_000, vocab=500, max_terms=12)
    path = tmp_path / "big.idx"
    idx.persist(path)
    assert ix.index_size_bytes(idx) == os.stat(path).st_size
    assert InvertedIndex.load(path).index_size_bytes() == os.stat(path).st_size


def _blob(rng):
    return bytearray(random_index(rng, 20, vocab=10).to_bytes())


def test_bad_magic_reports_offset_zero(rng):
    blob = _blob(rng)
    blob[0:8] = b"NOTANIDX"
    with pytest.raises(IndexFormatError) as err:
        InvertedIndex.from_bytes(bytes(blob))
    assert err.value.offset == 0


def test_truncated_file_reports_offset(rng):
    blob = bytes(_blob(rng))
    for cut in (4, 14, 40, len(blob) - 3):
        with pytest.raises(IndexFormatError) as err:
            InvertedIndex.from_bytes(blob[:cut])
        assert err.value.offset is not None and 0 <= err.value.offset <= len(blob)


def test_unsupported_version(rng):
    blob = _blob(rng)
    blob[8:12] = struct.pack("<I", 99)
    with pytest.raises(IndexFormatError) as err:
        InvertedIndex.from_bytes(bytes(blob))
    assert err.value.offset == 8


def test_corrupt_posting_payload_detected(rng):
    blob = _blob(rng)
    # flip the final byte (a term frequency): totals no longer match doc lengths
    blob[-1] ^= 0xFF
    with pytest.raises(IndexFormatError) as err:
        InvertedIndex.from_bytes(bytes(blob))
    assert err.value.offset > 16
    assert "offset" in str(err.value)


def test_trailing_garbage_rejected(rng):
    with pytest.raises(IndexFormatError):
        InvertedIndex.from_bytes(bytes(_blob(rng)) + b"\0")
