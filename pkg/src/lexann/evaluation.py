"""Brute-force ground truth, R@(k, d) and tabular recall reports."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingCorpus
from .errors import EvaluationError
from .methods import MethodConfig, build_searcher

log = logging.getLogger(__name__)

DEFAULT_K = 10
DEFAULT_DEPTHS = (10, 20, 50, 100)


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return vectors / norms


def brute_force_topk(corpus: EmbeddingCorpus, q, k: int, exclude: int | None = None) -> list[int]:
    """Exact top-``k`` doc ids by cosine similarity, ties by ascending id.

    ``exclude`` drops one doc id (the query word itself) from consideration;
    by default the query's own vector is a legitimate answer.
    """
    limit = len(corpus) - (exclude is not None)
    if k < 1 or k > limit:
        raise EvaluationError(f"k must lie in [1, {limit}], got {k}")
    q = np.asarray(q, dtype=np.float64)
    sims = _unit_rows(corpus.vectors) @ (q / np.linalg.norm(q))
    return _rank(sims, k, exclude)


def _rank(sims: np.ndarray, k: int, exclude=None) -> list[int]:
    ids = np.arange(len(sims))
    if exclude is not None:
        sims = sims.copy()
        sims[exclude] = -np.inf
    order = np.lexsort((ids, -sims))
    return order[:k].tolist()


def ground_truth(corpus: EmbeddingCorpus, query_ids: list[int], k: int,
                 exclude_self: bool = False) -> list[list[int]]:
    """:func:`brute_force_topk` for many corpus members at once."""
    unit = _unit_rows(corpus.vectors)
    truth = []
    for start in range(0, len(query_ids), 256):
        chunk = query_ids[start:start + 256]
        sims = unit[chunk] @ unit.T
        for row, qid in zip(sims, chunk):
            truth.append(_rank(row, k, qid if exclude_self else None))
    return truth


def recall_at(truth, retrieved) -> float:
    """|truth ∩ retrieved| / |truth| with set semantics."""
    truth = list(truth)
    if not truth:
        raise EvaluationError("ground truth list is empty")
    return len(set(truth) & set(retrieved)) / len(truth)


def sample_queries(corpus: EmbeddingCorpus, count: int = 100, seed: int = 42) -> list[str]:
    count = min(count, len(corpus))
    rng = np.random.default_rng(seed)
    return [corpus.words[i] for i in rng.choice(len(corpus), size=count, replace=False).tolist()]


@dataclass
class ReportRow:
    config: MethodConfig
    recall: dict[int, float]
    latency_mean_ms: float | None
    latency_p95_ms: float | None
    index_size_bytes: int
    build_seconds: float
    queries: int
    skipped: int = 0

    @property
    def model(self) -> str:
        return {"fake-words": "fake words", "lexical-lsh": "lexical LSH", "kd-tree": "k-d tree"}[self.config.encoder]

    @property
    def configuration(self) -> str:
        c = self.config
        if c.encoder == "fake-words":
            text = f"q={c.q}"
        elif c.encoder == "lexical-lsh":
            text = f"b={c.b}, h={c.h}, n={c.n}"
        else:
            text = c.pipeline
        return text + (" +rerank" if c.rerank else "")

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "configuration": self.configuration,
            "params": self.config.to_dict(),
            "recall": {str(d): r for d, r in self.recall.items()},
            "latency_ms": {"mean": self.latency_mean_ms, "p95": self.latency_p95_ms},
            "index_size_bytes": self.index_size_bytes,
            "build_seconds": self.build_seconds,
            "queries": self.queries,
            "skipped_queries": self.skipped,
        }


@dataclass
class RecallReport:
    k: int
    depths: list[int]
    rows: list[ReportRow] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def extend(self, other: "RecallReport") -> None:
        self.rows.extend(other.rows)

    def recall_table(self) -> list[dict]:
        """The latency-free part of the report, for determinism checks."""
        return [{"configuration": f"{r.model} {r.configuration}", "recall": dict(r.recall)} for r in self.rows]

    def to_dict(self) -> dict:
        return {"k": self.k, "depths": list(self.depths), "info": self.info,
                "rows": [r.to_dict() for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def to_text(self) -> str:
        header = ["Model", "Configuration"] + [f"d={d}" for d in self.depths] + ["latency", "index size"]
        body = []
        for r in self.rows:
            latency = "-" if r.latency_mean_ms is None else f"{r.latency_mean_ms:.2f}ms"
            body.append([r.model, r.configuration]
                        + [_fmt_recall(r.recall[d]) for d in self.depths]
                        + [latency, _fmt_size(r.index_size_bytes)])
        widths = [max(len(str(row[i])) for row in [header] + body) for i in range(len(header))]
        lines = [f"R@({self.k},d)"]
        for row in [header] + body:
            cells = [str(c).ljust(w) if i < 2 else str(c).rjust(w) for i, (c, w) in enumerate(zip(row, widths))]
            lines.append("  ".join(cells).rstrip())
        lines.insert(2, "-" * len(lines[1]))
        return "\n".join(lines)


def _fmt_recall(value: float) -> str:
    return f"{value:.3f}"


def _fmt_size(n: int) -> str:
    for unit in ("B", "KB", "MB"):
        if n < 1024 or unit == "MB":
            return f"{n:.0f}{unit}" if unit == "B" else f"{n:.1f}{unit}"
        n /= 1024


def run_eval(corpus: EmbeddingCorpus, queries: list[str], config: MethodConfig,
             k: int = DEFAULT_K, depths=DEFAULT_DEPTHS, *, exclude_self: bool = False,
             parallel: bool = False, truth: list[list[int]] | None = None,
             searcher=None) -> RecallReport:
    """Evaluate one configuration and return a one-row report.

    Each query is searched once at ``max(depths)``; every R@(k, d) comes from
    a prefix of that single ranking. Latency is wall-clock per query
    (encoding plus search) on a monotonic clock, and is left empty in
    parallel mode where contention would distort it.
    """
    depths = sorted(set(int(d) for d in depths))
    if not depths or depths[0] < 1:
        raise EvaluationError(f"depths must be positive, got {depths}")
    present = [w for w in queries if w in corpus]
    skipped = len(queries) - len(present)
    if skipped:
        log.warning("skipped %d query words absent from the corpus", skipped)
    if not present:
        raise EvaluationError("no query word is present in the corpus")
    query_ids = [corpus.id_of(w) for w in present]
    if truth is None:
        truth = ground_truth(corpus, query_ids, k, exclude_self)

    started = time.perf_counter()
    if searcher is None:
        searcher = build_searcher(config, corpus)
    build_seconds = time.perf_counter() - started
    max_d = depths[-1]

    def one(qid):
        t0 = time.perf_counter_ns()
        ranked = searcher.search(corpus.vectors[qid], max_d)
        elapsed = (time.perf_counter_ns() - t0) / 1e6
        return [d for d, _ in ranked], elapsed

    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(one, query_ids))
    else:
        results = [one(qid) for qid in query_ids]

    recall = {}
    for d in depths:
        recall[d] = float(np.mean([recall_at(t, ids[:d]) for t, (ids, _) in zip(truth, results)]))
    latencies = np.array([ms for _, ms in results])
    row = ReportRow(
        config=config,
        recall=recall,
        latency_mean_ms=None if parallel else float(latencies.mean()),
        latency_p95_ms=None if parallel else float(np.percentile(latencies, 95)),
        index_size_bytes=searcher.index_size_bytes(),
        build_seconds=build_seconds,
        queries=len(present),
        skipped=skipped,
    )
    return RecallReport(k, depths, [row])


def sweep(corpus: EmbeddingCorpus, queries: list[str], configs: list[MethodConfig],
          k: int = DEFAULT_K, depths=DEFAULT_DEPTHS, *, exclude_self: bool = False,
          parallel: bool = False, progress=None) -> RecallReport:
    """:func:`run_eval` over several configurations sharing one ground truth."""
    present = [w for w in queries if w in corpus]
    truth = ground_truth(corpus, [corpus.id_of(w) for w in present], k, exclude_self) if present else None
    report = RecallReport(k, sorted(set(depths)))
    for config in configs:
        if progress:
            progress(config)
        report.extend(run_eval(corpus, queries, config, k, depths, exclude_self=exclude_self,
                               parallel=parallel, truth=truth))
    return report
