"""Functional extraction and z-score normalization."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ned_entrain.errors import DimensionMismatch, EmptyFrames, EmptyResult
from ned_entrain.features import (
    CONSTANT_STD_TOL,
    LLD_DIM,
    NUM_DESCRIPTORS,
    NUM_FUNCTIONALS,
    FrameMatrix,
    NormScope,
    NormStats,
    compute_functionals,
    zscore_apply,
    zscore_apply_matrix,
    zscore_fit,
)


def _frames(arr):
    return FrameMatrix(session_id="s0", unit_index=0, frames=np.asarray(arr, float))


# ---------------------------------------------------------------------------
# FrameMatrix validation

def test_frame_matrix_rejects_wrong_column_count():
    with pytest.raises(DimensionMismatch):
        _frames(np.zeros((3, 7)))


def test_frame_matrix_rejects_empty():
    with pytest.raises(EmptyFrames):
        _frames(np.zeros((0, NUM_DESCRIPTORS)))


def test_frame_matrix_rejects_non_2d():
    with pytest.raises(DimensionMismatch):
        _frames(np.zeros(NUM_DESCRIPTORS))


# ---------------------------------------------------------------------------
# compute_functionals

def test_functionals_oracle_column_1_to_5():
    frames = np.tile(np.arange(1.0, 6.0)[:, None], (1, NUM_DESCRIPTORS))
    out = compute_functionals(_frames(frames))
    assert out.shape == (LLD_DIM,)
    for col in range(NUM_DESCRIPTORS):
        mean, median, std, p01, p99, rng_ = out[col * 6 : col * 6 + 6]
        assert abs(mean - 3.0) < 1e-12
        assert abs(median - 3.0) < 1e-12
        assert abs(std - math.sqrt(2.0)) < 1e-12
        assert abs(p01 - 1.04) < 1e-12
        assert abs(p99 - 4.96) < 1e-12
        assert abs(rng_ - 3.92) < 1e-12


def test_functionals_single_constant_frame():
    frames = np.full((1, NUM_DESCRIPTORS), 7.25)
    out = compute_functionals(_frames(frames))
    expected = np.tile([7.25, 7.25, 0.0, 7.25, 7.25, 0.0], NUM_DESCRIPTORS)
    np.testing.assert_allclose(out, expected, atol=0)


def test_functionals_duplicated_frame_matches_single():
    rng = np.random.default_rng(0)
    row = rng.normal(size=NUM_DESCRIPTORS)
    one = compute_functionals(_frames(row[None, :]))
    two = compute_functionals(_frames(np.vstack([row, row])))
    np.testing.assert_allclose(one, two, atol=1e-12)


def test_functionals_column_major_layout():
    # Column j's slot must hold column j's stats, not another column's.
    frames = np.zeros((4, NUM_DESCRIPTORS))
    frames[:, 5] = [1.0, 2.0, 3.0, 4.0]
    out = compute_functionals(_frames(frames))
    assert abs(out[5 * 6 + 0] - 2.5) < 1e-12
    assert out[0] == 0.0


def test_functionals_accepts_plain_ndarray():
    frames = np.ones((3, NUM_DESCRIPTORS))
    np.testing.assert_allclose(
        compute_functionals(frames), compute_functionals(_frames(frames)), atol=0
    )


frame_arrays = hnp.arrays(
    np.float64,
    st.integers(1, 30).map(lambda n: (n, NUM_DESCRIPTORS)),
    elements=st.floats(-100, 100, allow_nan=False, width=64),
)


@given(frame_arrays, st.randoms(use_true_random=False))
@settings(max_examples=40, deadline=None)
def test_functionals_invariant_under_frame_shuffling(frames, pyrandom):
    base = compute_functionals(_frames(frames))
    order = list(range(frames.shape[0]))
    pyrandom.shuffle(order)
    shuffled = compute_functionals(_frames(frames[order]))
    np.testing.assert_allclose(base, shuffled, atol=1e-12)


@given(frame_arrays, st.floats(0.01, 50, allow_nan=False))
@settings(max_examples=40, deadline=None)
def test_functionals_scale_equivariant(frames, a):
    base = compute_functionals(_frames(frames))
    scaled = compute_functionals(_frames(frames * a))
    np.testing.assert_allclose(scaled, a * base, atol=1e-8 * a)


# ---------------------------------------------------------------------------
# z-scoring

def test_zscore_fit_hand_oracle():
    stats = zscore_fit(np.array([[0.0, 10.0], [2.0, 10.0]]))
    np.testing.assert_allclose(stats.mean, [1.0, 10.0], atol=0)
    np.testing.assert_allclose(stats.std, [1.0, 0.0], atol=0)
    np.testing.assert_array_equal(stats.constant_mask, [False, True])
    assert stats.scope is NormScope.CORPUS


def test_zscore_fit_repeated_vector_flags_everything():
    v = np.array([3.0, -1.0, 2.0])
    stats = zscore_fit(np.tile(v, (5, 1)))
    assert stats.constant_mask.all()
    np.testing.assert_allclose(stats.mean, v, atol=0)


def test_zscore_fit_requires_two_vectors():
    with pytest.raises(EmptyResult):
        zscore_fit(np.zeros((1, 4)))


def test_zscore_fit_rejects_mixed_dimensions():
    with pytest.raises(DimensionMismatch):
        zscore_fit([np.zeros(3), np.zeros(4)])


def test_zscore_apply_hand_oracle():
    stats = zscore_fit(np.array([[0.0, 10.0], [2.0, 10.0]]))
    np.testing.assert_allclose(
        zscore_apply(np.array([3.0, 10.0]), stats), [2.0, 0.0], atol=0
    )
    # The fitted mean itself normalizes to the zero vector.
    np.testing.assert_allclose(zscore_apply(stats.mean, stats), [0.0, 0.0], atol=0)


def test_zscore_apply_rejects_wrong_dimension():
    stats = zscore_fit(np.zeros((3, 2)) + np.arange(3)[:, None])
    with pytest.raises(DimensionMismatch):
        zscore_apply(np.zeros(5), stats)


def test_zscore_fit_then_apply_standardizes():
    rng = np.random.default_rng(1)
    data = rng.normal(3.0, 5.0, size=(200, 12))
    data[:, 4] = 2.5  # constant dimension
    stats = zscore_fit(data)
    z = zscore_apply_matrix(data, stats)
    live = np.ones(12, bool)
    live[4] = False
    assert np.all(np.abs(z[:, live].mean(axis=0)) < 1e-9)
    assert np.all(np.abs(z[:, live].std(axis=0) - 1.0) < 1e-9)
    assert np.all(z[:, 4] == 0.0)


def test_zscore_apply_matrix_matches_per_row_apply():
    rng = np.random.default_rng(2)
    data = rng.normal(size=(6, 5))
    stats = zscore_fit(data)
    batch = zscore_apply_matrix(data, stats)
    rows = np.stack([zscore_apply(row, stats) for row in data])
    np.testing.assert_allclose(batch, rows, atol=0)


vectors = hnp.arrays(
    np.float64, (8, 6), elements=st.floats(-100, 100, allow_nan=False, width=64)
)


@given(vectors)
@settings(max_examples=40, deadline=None)
def test_zscore_round_trip(data):
    stats = zscore_fit(data)
    z = zscore_apply_matrix(data, stats)
    # Inverting the affine map recovers the input on non-constant dims.
    back = z * stats.std + stats.mean
    live = ~stats.constant_mask
    np.testing.assert_allclose(back[:, live], data[:, live], atol=1e-9)


def test_norm_stats_constant_mask_uses_tolerance():
    stats = NormStats(
        mean=np.zeros(2),
        std=np.array([CONSTANT_STD_TOL / 2, 1.0]),
        scope=NormScope.CORPUS,
    )
    assert stats.constant_mask[0]
    assert not stats.constant_mask[1]


def test_lld_dim_constant():
    assert NUM_DESCRIPTORS == 38
    assert NUM_FUNCTIONALS == 6
    assert LLD_DIM == 228
