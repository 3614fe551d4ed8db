"""PCA, principal-component removal (PPA) and the PPA-PCA-PPA pipeline.

All fitting uses a symmetric eigendecomposition of the full-sample
covariance. Axes are returned variance-descending with a deterministic
sign: the largest-magnitude entry of every axis is positive.

Projection of corpus vectors and of query vectors goes through the same
per-vector routine (:meth:`ProjectionModel.transform_one`), so a corpus
vector transformed later is bit-identical to its row in the reduced output.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import EncodingError, IndexFormatError

MAX_KD_DIMS = 8
PIPELINES = ("pca", "ppa-pca-ppa")


def _as_matrix(X) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise EncodingError(f"expected a 2-D array of vectors, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise EncodingError("input contains non-finite values")
    return arr


def _orient(axes: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(axes), axis=1)
    signs = np.sign(axes[np.arange(len(axes)), idx])
    signs[signs == 0] = 1.0
    return axes * signs[:, None]


def principal_axes(X: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column mean, top-``p`` covariance eigenvectors (rows) and their eigenvalues."""
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (len(X) - 1)
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1][:p]
    return mean, _orient(vectors[:, order].T), values[order]


@dataclass
class PcaModel:
    mean: np.ndarray
    axes: np.ndarray
    explained_variance: np.ndarray

    def transform_one(self, x) -> np.ndarray:
        return self.axes @ (np.asarray(x, dtype=np.float64) - self.mean)

    def inverse_one(self, z) -> np.ndarray:
        return self.axes.T @ np.asarray(z, dtype=np.float64) + self.mean


def pca_fit(X, p: int) -> PcaModel:
    X = _as_matrix(X)
    n, m = X.shape
    if p < 1 or p > m:
        raise EncodingError(f"p must lie in [1, {m}], got {p}")
    if n <= 1:
        raise EncodingError("PCA needs at least two vectors")
    mean, axes, values = principal_axes(X, p)
    return PcaModel(mean, axes, values)


@dataclass
class PpaModel:
    """Mean-centering followed by removal of the top principal directions."""

    mean: np.ndarray
    directions: np.ndarray

    def transform_one(self, x) -> np.ndarray:
        centered = np.asarray(x, dtype=np.float64) - self.mean
        return centered - self.directions.T @ (self.directions @ centered)


def ppa_fit(X, D: int) -> PpaModel:
    X = _as_matrix(X)
    if D < 1:
        raise EncodingError(f"D must be >= 1, got {D}")
    if len(X) <= D:
        raise EncodingError(f"need more than D={D} vectors, got {len(X)}")
    rank = np.linalg.matrix_rank(X - X.mean(axis=0))
    if D >= rank:
        raise EncodingError(f"D={D} must be below the rank of the centered data ({rank})")
    mean, directions, _ = principal_axes(X, D)
    return PpaModel(mean, directions)


def ppa(X, D: int) -> np.ndarray:
    """Center ``X`` and strip its top-``D`` principal directions."""
    model = ppa_fit(X, D)
    return np.array([model.transform_one(x) for x in _as_matrix(X)])


@dataclass
class ProjectionModel:
    """Fitted reduction stages, applied in order by :meth:`transform_one`."""

    pipeline: str
    stages: list = field(default_factory=list)
    ppa_d: int = 0

    @property
    def pca(self) -> PcaModel:
        return next(s for s in self.stages if isinstance(s, PcaModel))

    @property
    def mean(self) -> np.ndarray:
        return self.stages[0].mean

    @property
    def axes(self) -> np.ndarray:
        return self.pca.axes

    @property
    def output_dim(self) -> int:
        return self.pca.axes.shape[0]

    @property
    def input_dim(self) -> int:
        return self.stages[0].mean.shape[0]

    def transform_one(self, x) -> np.ndarray:
        out = np.asarray(x, dtype=np.float64)
        for stage in self.stages:
            out = stage.transform_one(out)
        return out

    def transform(self, X) -> np.ndarray:
        X = _as_matrix(X)
        return np.array([self.transform_one(x) for x in X]).reshape(len(X), self.output_dim)

    def to_bytes(self) -> bytes:
        """Binary layout (little-endian)::

            uint8  pipeline (0 = pca, 1 = ppa-pca-ppa)
            uint32 ppa_d
            uint32 stage count
            per stage:
              uint8  kind (0 = pca, 1 = ppa)
              uint32 rows, uint32 cols
              f64[cols]        mean
              f64[rows * cols] axes or removed directions, row-major
              f64[rows]        explained variance (pca stages only)
        """
        parts = [struct.pack("<BII", PIPELINES.index(self.pipeline), self.ppa_d, len(self.stages))]
        for stage in self.stages:
            is_pca = isinstance(stage, PcaModel)
            matrix = stage.axes if is_pca else stage.directions
            parts.append(struct.pack("<BII", 0 if is_pca else 1, *matrix.shape))
            parts.append(stage.mean.astype("<f8").tobytes())
            parts.append(matrix.astype("<f8").tobytes())
            if is_pca:
                parts.append(stage.explained_variance.astype("<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_reader(cls, reader) -> "ProjectionModel":
        """Parse the :meth:`to_bytes` layout from a :class:`storage.SectionReader`."""
        start = reader.offset()
        kind, ppa_d, n_stages = reader.unpack("<BII")
        if kind >= len(PIPELINES):
            raise IndexFormatError(f"unknown pipeline code {kind}", start)
        stages = []
        for _ in range(n_stages):
            at = reader.offset()
            stage_kind, rows, cols = reader.unpack("<BII")
            mean = np.frombuffer(reader.take(8 * cols), dtype="<f8").astype(np.float64)
            matrix = np.frombuffer(reader.take(8 * rows * cols), dtype="<f8").astype(np.float64)
            matrix = matrix.reshape(rows, cols)
            if stage_kind == 0:
                var = np.frombuffer(reader.take(8 * rows), dtype="<f8").astype(np.float64)
                stages.append(PcaModel(mean, matrix, var))
            elif stage_kind == 1:
                stages.append(PpaModel(mean, matrix))
            else:
                raise IndexFormatError(f"unknown stage kind {stage_kind}", at)
        if not any(isinstance(s, PcaModel) for s in stages):
            raise IndexFormatError("projection model has no PCA stage", start)
        return cls(PIPELINES[kind], stages, ppa_d)


def reduce(X, pipeline: str = "pca", p: int = MAX_KD_DIMS, D: int = 7) -> tuple[ProjectionModel, np.ndarray]:
    """Fit a reduction pipeline on ``X`` and return the model with the reduced rows."""
    if pipeline not in PIPELINES:
        raise EncodingError(f"unknown pipeline {pipeline!r}; expected one of {PIPELINES}")
    if not 1 <= p <= MAX_KD_DIMS:
        raise EncodingError(f"reduced dimensionality must lie in [1, {MAX_KD_DIMS}], got {p}")
    X = _as_matrix(X)
    if pipeline == "pca":
        model = ProjectionModel("pca", [pca_fit(X, p)], 0)
    else:
        first = ppa_fit(X, D)
        stripped = np.array([first.transform_one(x) for x in X])
        pca = pca_fit(stripped, p)
        reduced = np.array([pca.transform_one(x) for x in stripped])
        stages = [first, pca]
        second_d = min(D, p - 1)
        if second_d >= 1:
            stages.append(ppa_fit(reduced, second_d))
        model = ProjectionModel("ppa-pca-ppa", stages, D)
    return model, model.transform(X)
