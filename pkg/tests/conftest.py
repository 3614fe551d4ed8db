import numpy as np
import pytest

from lexann.index import InvertedIndex, TermDocument


def random_index(rng, n_docs, vocab=40, max_terms=8, max_freq=5, start_id=0):
    index = InvertedIndex()
    for doc_id in range(start_id, start_id + n_docs):
        k = int(rng.integers(0, min(max_terms, vocab) + 1))
        terms = {f"t{int(t)}": int(rng.integers(1, max_freq + 1))
                 for t in rng.choice(vocab, size=k, replace=False)}
        index.add_document(TermDocument(doc_id, terms))
    return index.finalize()


def random_query(rng, vocab=40, max_terms=5):
    k = int(rng.integers(1, min(max_terms, vocab) + 1))
    return {f"t{int(t)}": int(rng.integers(1, 4)) for t in rng.choice(vocab, size=k, replace=False)}


def exhaustive_ranking(index, query):
    """Oracle: score every document on its own, keep positives, sort by (-score, id)."""
    scored = [(d, index.tf_idf_score(query, d)) for d in index.doc_ids]
    return sorted([s for s in scored if s[1] > 0], key=lambda s: (-s[1], s[0]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
