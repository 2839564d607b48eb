"""Functional summaries of frame-level descriptors and z-score normalization.

A unit's frame matrix (one row per analysis frame, 38 descriptor columns:
4 prosody, 31 spectral, 3 voice quality) is reduced to six functionals per
column — mean, median, population standard deviation, 1st percentile, 99th
percentile, and range (p99 - p1) — concatenated column-major into a
38 * 6 = 228 dimensional vector.

Percentiles use linear interpolation between closest ranks (the (n-1)*q
convention), and all standard deviations here are population (biased) ones.
Both conventions are fixed so independent oracles can agree exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatch, EmptyFrames, EmptyResult

NUM_DESCRIPTORS = 38
NUM_FUNCTIONALS = 6
FUNCTIONAL_NAMES = ("mean", "median", "std", "p01", "p99", "range")
LLD_DIM = NUM_DESCRIPTORS * NUM_FUNCTIONALS

# Near-zero population std below which a dimension is treated as constant.
CONSTANT_STD_TOL = 1e-12


class NormScope(str, enum.Enum):
    SESSION = "SESSION"
    CORPUS = "CORPUS"


@dataclass(frozen=True)
class FrameMatrix:
    """Frame-level descriptors for one unit.

    frames has shape (num_frames, 38) with at least one row.
    """

    session_id: str
    unit_index: int
    frames: np.ndarray

    def __post_init__(self) -> None:
        frames = np.ascontiguousarray(np.asarray(self.frames, dtype=np.float64))
        if frames.ndim != 2:
            raise DimensionMismatch(
                f"frame matrix must be 2-dimensional, got ndim={frames.ndim}"
            )
        if frames.shape[0] < 1:
            raise EmptyFrames(
                f"unit ({self.session_id!r}, {self.unit_index}) has no frames"
            )
        if frames.shape[1] != NUM_DESCRIPTORS:
            raise DimensionMismatch(
                f"expected {NUM_DESCRIPTORS} descriptor columns, "
                f"got {frames.shape[1]}"
            )
        object.__setattr__(self, "frames", frames)


@dataclass(frozen=True)
class NormStats:
    """Per-dimension z-score statistics.

    constant_mask flags dimensions whose population std is (numerically)
    zero; zscore_apply maps those to exactly 0.
    """

    mean: np.ndarray
    std: np.ndarray
    scope: NormScope
    constant_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise DimensionMismatch("mean/std must be 1-d vectors of equal length")
        mask = self.constant_mask
        if mask is None:
            mask = std <= CONSTANT_STD_TOL
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != std.shape:
            raise DimensionMismatch("constant_mask length must match std")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "constant_mask", mask)

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


def compute_functionals(frames: FrameMatrix | np.ndarray) -> np.ndarray:
    """Reduce a frame matrix to its per-column functional vector.

    Accepts a FrameMatrix (strict 38 columns, yielding the canonical 228-dim
    vector) or a raw (num_frames, ncols) array for ncols-agnostic use. Output
    order is [mean, median, std, p1, p99, range] per column, columns
    concatenated left to right.
    """
    if isinstance(frames, FrameMatrix):
        mat = frames.frames
    else:
        mat = np.ascontiguousarray(np.asarray(frames, dtype=np.float64))
        if mat.ndim != 2:
            raise DimensionMismatch(
                f"frame matrix must be 2-dimensional, got ndim={mat.ndim}"
            )
        if mat.shape[0] < 1:
            raise EmptyFrames("frame matrix has no rows")
    return kernels.column_functionals(mat)


def zscore_fit(
    vectors: list[np.ndarray] | np.ndarray, scope: NormScope = NormScope.CORPUS
) -> NormStats:
    """Fit per-dimension mean and population std over a set of vectors.

    Requires at least two vectors of equal dimension. Dimensions with zero
    std are flagged constant in the returned stats.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        mat = np.asarray(vectors, dtype=np.float64)
    else:
        rows = [np.asarray(v, dtype=np.float64) for v in vectors]
        if len(rows) < 2:
            raise EmptyResult("zscore_fit requires at least 2 vectors")
        dim = rows[0].shape
        for i, r in enumerate(rows):
            if r.shape != dim or r.ndim != 1:
                raise DimensionMismatch(
                    f"vector {i} has shape {r.shape}, expected {dim}"
                )
        mat = np.stack(rows)
    if mat.shape[0] < 2:
        raise EmptyResult("zscore_fit requires at least 2 vectors")
    mean = mat.mean(axis=0)
    std = np.sqrt(np.mean((mat - mean) ** 2, axis=0))
    return NormStats(mean=mean, std=std, scope=scope)


def zscore_apply(v: np.ndarray, stats: NormStats) -> np.ndarray:
    """Apply fitted stats to one vector; constant dimensions map to 0."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != stats.mean.shape:
        raise DimensionMismatch(
            f"vector has shape {v.shape}, stats expect {stats.mean.shape}"
        )
    safe_std = np.where(stats.constant_mask, 1.0, stats.std)
    out = (v - stats.mean) / safe_std
    out[stats.constant_mask] = 0.0
    return out


def zscore_apply_matrix(mat: np.ndarray, stats: NormStats) -> np.ndarray:
    """Row-wise zscore_apply for a 2-d batch of vectors."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] != stats.dim:
        raise DimensionMismatch(
            f"matrix has shape {mat.shape}, stats expect dim {stats.dim}"
        )
    safe_std = np.where(stats.constant_mask, 1.0, stats.std)
    out = (mat - stats.mean) / safe_std
    out[:, stats.constant_mask] = 0.0
    return np.ascontiguousarray(out)
