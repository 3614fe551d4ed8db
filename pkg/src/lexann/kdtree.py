"""Exact k-nearest-neighbour search over low-dimensional points.

Nodes split at the median of the axis with the widest spread; leaves hold
at most ``leaf_size`` points. Queries descend to the nearer child first and
visit the farther child only if the splitting plane is no farther than the
current k-th best distance, so the result is exact. Equal distances are
ordered by ascending doc id.
"""

from __future__ import annotations

import heapq
import struct

import numpy as np

from . import storage
from .errors import IndexFormatError
from .reduction import MAX_KD_DIMS, ProjectionModel

LEAF_SIZE = 16


class _Node:
    __slots__ = ("axis", "split", "left", "right", "start", "stop")

    def __init__(self, start, stop, axis=-1, split=0.0, left=None, right=None):
        self.start = start
        self.stop = stop
        self.axis = axis
        self.split = split
        self.left = left
        self.right = right

    @property
    def is_leaf(self):
        return self.left is None


class KdTree:
    def __init__(self, points, doc_ids=None, leaf_size: int = LEAF_SIZE):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2:
            raise ValueError(f"points must be a 2-D array, got shape {points.shape}")
        if points.shape[1] > MAX_KD_DIMS:
            raise ValueError(f"k-d tree supports at most {MAX_KD_DIMS} dimensions, got {points.shape[1]}")
        if not np.all(np.isfinite(points)):
            raise ValueError("points contain non-finite values")
        if doc_ids is None:
            doc_ids = np.arange(len(points))
        doc_ids = np.asarray(doc_ids, dtype=np.int64)
        if len(doc_ids) != len(points):
            raise ValueError("doc_ids and points differ in length")
        if len(np.unique(doc_ids)) != len(doc_ids):
            raise ValueError("doc_ids must be unique")
        self.leaf_size = leaf_size
        self.dim = points.shape[1]
        self._order = np.arange(len(points))
        self._source = points
        self.root = self._build(0, len(points)) if len(points) else None
        # leaf points are stored contiguously so a leaf scan is one slice
        self.points = points[self._order]
        self.doc_ids = doc_ids[self._order]
        del self._source

    def __len__(self):
        return len(self.doc_ids)

    def _build(self, start, stop):
        idx = self._order[start:stop]
        if stop - start <= self.leaf_size:
            return _Node(start, stop)
        pts = self._source[idx]
        spread = pts.max(axis=0) - pts.min(axis=0)
        axis = int(np.argmax(spread))
        if spread[axis] == 0.0:
            return _Node(start, stop)
        mid = (stop - start) // 2
        part = np.argpartition(pts[:, axis], mid)
        self._order[start:stop] = idx[part]
        split = float(self._source[self._order[start + mid], axis])
        left = self._build(start, start + mid)
        right = self._build(start + mid, stop)
        return _Node(start, stop, axis, split, left, right)

    def knn(self, q, k: int) -> list[tuple[int, float]]:
        """The ``k`` nearest points as ``(doc_id, euclidean distance)``, nearest first."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"query must have shape ({self.dim},), got {q.shape}")
        if self.root is None:
            return []
        k = min(k, len(self))
        # max-heap on (distance, doc_id) via negation; heap[0] is the worst kept
        heap: list[tuple[float, int]] = []
        self._search(self.root, q, k, heap)
        best = sorted((-nd, -nid) for nd, nid in heap)
        return [(doc_id, float(np.sqrt(d2))) for d2, doc_id in best]

    def _search(self, node, q, k, heap):
        if node.is_leaf:
            pts = self.points[node.start:node.stop]
            d2 = ((pts - q) ** 2).sum(axis=1)
            for dist, doc_id in zip(d2.tolist(), self.doc_ids[node.start:node.stop].tolist()):
                item = (-dist, -doc_id)
                if len(heap) < k:
                    heapq.heappush(heap, item)
                elif item > heap[0]:
                    heapq.heapreplace(heap, item)
            return
        gap = q[node.axis] - node.split
        near, far = (node.left, node.right) if gap < 0 else (node.right, node.left)
        self._search(near, q, k, heap)
        if len(heap) < k or gap * gap <= -heap[0][0]:
            self._search(far, q, k, heap)

    # -- persistence ----------------------------------------------------

    def to_bytes(self, model: ProjectionModel | None = None, metadata: dict | None = None) -> bytes:
        header = {"kind": "kdtree", "N": len(self), "dim": self.dim, "leaf_size": self.leaf_size,
                  "metadata": metadata or {}}
        order = np.argsort(self.doc_ids, kind="stable")
        sections = {"points": self.doc_ids[order].astype("<i8").tobytes()
                    + self.points[order].astype("<f8").tobytes()}
        if model is not None:
            sections["projection"] = model.to_bytes()
        return storage.encode_container(header, sections)

    @classmethod
    def from_bytes(cls, data: bytes) -> tuple["KdTree", ProjectionModel | None, dict]:
        header, sections, offsets = storage.decode_container(data)
        if header.get("kind") != "kdtree":
            raise IndexFormatError(f"expected a k-d tree index, found kind={header.get('kind')!r}", 16)
        if "points" not in sections:
            raise IndexFormatError("missing 'points' section", len(data))
        n, dim = header.get("N"), header.get("dim")
        if not isinstance(n, int) or not isinstance(dim, int) or n < 0 or not 1 <= dim <= MAX_KD_DIMS:
            raise IndexFormatError(f"bad point count or dimension ({n!r}, {dim!r})", 16)
        reader = storage.SectionReader(sections["points"], offsets["points"], "points")
        ids = np.frombuffer(reader.take(8 * n), dtype="<i8").astype(np.int64)
        pts = np.frombuffer(reader.take(8 * n * dim), dtype="<f8").astype(np.float64).reshape(n, dim)
        reader.finish()
        model = None
        if "projection" in sections:
            preader = storage.SectionReader(sections["projection"], offsets["projection"], "projection")
            try:
                model = ProjectionModel.from_reader(preader)
            except (ValueError, struct.error) as exc:
                raise IndexFormatError(f"bad projection model: {exc}", offsets["projection"]) from None
            preader.finish()
        tree = cls(pts, ids, leaf_size=int(header.get("leaf_size", LEAF_SIZE)))
        return tree, model, header.get("metadata") or {}


def kdtree_build(points, doc_ids=None) -> KdTree:
    return KdTree(points, doc_ids)


def kdtree_knn(tree: KdTree, q, k: int) -> list[tuple[int, float]]:
    return tree.knn(q, k)
