import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evcodec.events import EventStream
from evcodec.superframe import (BLOCK_SIZE, Block, Normalizer, SuperFrame,
                                aggregate, block_grid, blocks_to_matrix,
                                fit_normalizer, from_blocks, to_blocks)

from streams import poisson_stream


def brute_force_counts(stream, dt):
    """Independent per-event counting oracle."""
    if len(stream) == 0:
        return []
    t0 = stream.t[0]
    grids = {}
    for ev in stream:
        k = 0
        while ev.t - t0 >= (k + 1) * dt:
            k += 1
        grid = grids.setdefault(k, np.zeros(
            (stream.sensor_height, 2 * stream.sensor_width), dtype=np.int64))
        col = ev.x + (stream.sensor_width if ev.p == 1 else 0)
        grid[ev.y, col] += 1
    n = max(grids) + 1
    return [grids.get(k, np.zeros_like(grids[max(grids)])) for k in range(n)]


def test_window_boundary_two_frames():
    stream = EventStream(np.array([0.0002, 0.0007]), np.array([0, 1]),
                         np.array([0, 0]), np.array([0, 0]), 4, 4)
    frames = aggregate(stream, 0.0005)
    assert len(frames) == 2
    assert [int(f.counts.sum()) for f in frames] == [1, 1]


def test_repeat_pixel_counts_three():
    stream = EventStream(np.array([0.001, 0.002, 0.003]), np.array([2, 2, 2]),
                         np.array([1, 1, 1]), np.array([1, 1, 1]), 4, 4)
    frames = aggregate(stream, 0.01)
    oracle = brute_force_counts(stream, 0.01)
    assert len(frames) == len(oracle) == 1
    np.testing.assert_array_equal(frames[0].counts, oracle[0])
    assert frames[0].counts[1, 4 + 2] == 3


def test_polarity_one_lands_in_right_half():
    stream = EventStream(np.array([0.0]), np.array([2]), np.array([1]),
                         np.array([1]), 4, 4)
    frames = aggregate(stream, 0.001)
    assert frames[0].counts.shape == (4, 8)
    assert frames[0].counts[1, 6] == 1
    assert frames[0].counts.sum() == 1


def test_aggregate_matches_brute_force_oracle():
    for seed in range(5):
        stream = poisson_stream(seed, 300, sensor_width=8, sensor_height=6,
                                duration=0.02)
        for dt in (0.5e-3, 5e-3):
            frames = aggregate(stream, dt)
            oracle = brute_force_counts(stream, dt)
            assert len(frames) == len(oracle)
            for f, grid in zip(frames, oracle):
                np.testing.assert_array_equal(f.counts, grid)


def test_aggregate_empty_and_bad_dt():
    empty = EventStream(np.array([]), np.array([]), np.array([]),
                        np.array([]), 4, 4)
    assert aggregate(empty, 0.01) == []
    with pytest.raises(ValueError):
        aggregate(empty, 0.0)


def test_windows_anchor_at_first_event():
    stream = EventStream(np.array([5.0, 5.001]), np.array([0, 0]),
                         np.array([0, 0]), np.array([0, 1]), 4, 4)
    frames = aggregate(stream, 0.01)
    assert len(frames) == 1
    assert frames[0].t_start == pytest.approx(5.0)


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 10_000), st.sampled_from([0.5e-3, 5e-3, 10e-3, 20e-3, 30e-3]))
def test_event_conservation_and_polarity_split(seed, dt):
    stream = poisson_stream(seed, 200, sensor_width=8, sensor_height=6,
                            duration=0.03)
    frames = aggregate(stream, dt)
    total = sum(int(f.counts.sum()) for f in frames)
    assert total == len(stream)
    w = stream.sensor_width
    left = sum(int(f.counts[:, :w].sum()) for f in frames)
    right = sum(int(f.counts[:, w:].sum()) for f in frames)
    assert left == int(np.sum(stream.p == 0))
    assert right == int(np.sum(stream.p == 1))


def _frame(counts, idx=0):
    return SuperFrame(idx, 0.0, 0.01, np.asarray(counts, dtype=np.int64))


def test_fit_normalizer():
    zero = _frame(np.zeros((4, 8)))
    assert fit_normalizer([zero]).scale == 1.0
    eight = _frame(np.full((4, 8), 0) + np.eye(4, 8, dtype=np.int64) * 8)
    assert fit_normalizer([eight]).scale == 8.0
    three = _frame(np.full((4, 8), 3))
    seven = _frame(np.full((4, 8), 7))
    assert fit_normalizer([three, seven]).scale == 7.0
    with pytest.raises(ValueError):
        fit_normalizer([])


def test_normalizer_floor():
    with pytest.raises(ValueError):
        Normalizer(0.5)


def test_block_count_for_paper_scale_frame():
    # 240x180 sensor: super-frame is 180 rows by 480 columns, 6x16 blocks
    frame = _frame(np.zeros((180, 480)))
    blocks = to_blocks(frame, Normalizer(1.0))
    assert len(blocks) == 96
    assert block_grid(240, 180) == (6, 16)


def test_small_frame_pads_to_one_block():
    frame = _frame(np.zeros((4, 8)))
    blocks = to_blocks(frame, Normalizer(1.0))
    assert len(blocks) == 1
    assert blocks[0].values.shape == (BLOCK_SIZE, BLOCK_SIZE)


def test_block_values_saturating_normalization():
    counts = np.zeros((4, 8), dtype=np.int64)
    counts[0, 0] = 5
    counts[0, 1] = 9
    blocks = to_blocks(_frame(counts), Normalizer(8.0))
    assert blocks[0].values[0, 0] == pytest.approx(5 / 8)
    assert blocks[0].values[0, 1] == pytest.approx(1.0)


def test_blocks_raster_order():
    frame = _frame(np.zeros((31, 62)))
    blocks = to_blocks(frame, Normalizer(1.0))
    origins = [(b.origin_row, b.origin_col) for b in blocks]
    assert origins == [(0, 0), (0, 30), (0, 60), (30, 0), (30, 30), (30, 60)]


def test_block_count_formula():
    for w, h in [(4, 4), (30, 30), (60, 60), (240, 180), (17, 93)]:
        frame = _frame(np.zeros((h, 2 * w)))
        blocks = to_blocks(frame, Normalizer(1.0))
        assert len(blocks) == math.ceil(h / 30) * math.ceil(2 * w / 30)


def test_round_trip_without_saturation():
    rng = np.random.default_rng(0)
    counts = rng.integers(0, 7, size=(4, 8))
    frame = _frame(counts)
    norm = Normalizer(8.0)
    back = from_blocks(to_blocks(frame, norm), 4, 4, norm)
    np.testing.assert_array_equal(back.counts, counts)


def test_from_blocks_inverse_scaling():
    values = np.zeros((BLOCK_SIZE, BLOCK_SIZE))
    values[0, 0] = 0.625
    block = Block(0, 0, 0, values)
    frame = from_blocks([block], 4, 4, Normalizer(8.0))
    assert frame.counts[0, 0] == 5


def test_from_blocks_duplicate_origin():
    values = np.zeros((BLOCK_SIZE, BLOCK_SIZE))
    blocks = [Block(0, 0, 0, values), Block(0, 0, 0, values)]
    with pytest.raises(ValueError, match="overlapping"):
        from_blocks(blocks, 4, 4, Normalizer(1.0))


def test_from_blocks_missing_origin():
    values = np.zeros((BLOCK_SIZE, BLOCK_SIZE))
    with pytest.raises(ValueError, match="missing"):
        from_blocks([Block(0, 0, 0, values)], 30, 30, Normalizer(1.0))


def test_from_blocks_unexpected_origin():
    values = np.zeros((BLOCK_SIZE, BLOCK_SIZE))
    with pytest.raises(ValueError, match="outside"):
        from_blocks([Block(0, 0, 90, values)], 4, 4, Normalizer(1.0))


def test_blocks_to_matrix_shape():
    frame = _frame(np.zeros((31, 62)))
    X = blocks_to_matrix(to_blocks(frame, Normalizer(1.0)))
    assert X.shape == (6, BLOCK_SIZE * BLOCK_SIZE)
    assert blocks_to_matrix([]).shape == (0, BLOCK_SIZE * BLOCK_SIZE)
