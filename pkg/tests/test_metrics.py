import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evcodec.metrics import (MetricsReport, e2e_cr, io_cr, mse, psnr,
                             psnr_frame_mean, psnr_global, reports_to_csv,
                             superframe_bits)
from evcodec.superframe import SuperFrame


def test_e2e_cr_values():
    assert e2e_cr(6400, 6400) == pytest.approx(1.0)
    assert e2e_cr(6400, 64) == pytest.approx(100.0)
    with pytest.raises(ValueError):
        e2e_cr(6400, 0)


def test_e2e_cr_linear_in_raw_size():
    assert e2e_cr(2 * 12345, 777) == pytest.approx(2 * e2e_cr(12345, 777))


def test_io_cr_values():
    # one 30x30 block at 16 bits per cell against a 200-bit payload
    assert io_cr(30 * 30 * 16, 200) == pytest.approx(72.0)
    assert io_cr(4096, 4096) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        io_cr(100, 0)


def test_superframe_bits():
    frame = SuperFrame(0, 0.0, 0.01, np.zeros((30, 30), dtype=np.int64))
    assert superframe_bits([frame]) == 14_400
    assert superframe_bits([frame, frame]) == 28_800


def test_psnr_identical_is_infinite_marker():
    a = np.random.default_rng(0).random((5, 5))
    assert math.isinf(psnr(a, a))


def test_psnr_zero_db_when_mse_equals_peak_squared():
    a = np.zeros((4, 4))
    b = np.ones((4, 4))
    assert psnr(a, b, peak=1.0) == pytest.approx(0.0)


def test_psnr_formula_value():
    a = np.zeros((10, 10))
    b = np.full((10, 10), 0.1)  # mse = 0.01
    assert psnr(a, b, peak=1.0) == pytest.approx(20.0)


def test_psnr_dimension_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        psnr(np.zeros((2, 2)), np.zeros((3, 3)))


def test_psnr_accepts_superframes():
    a = SuperFrame(0, 0.0, 0.01, np.zeros((4, 8), dtype=np.int64))
    b = SuperFrame(0, 0.0, 0.01, np.ones((4, 8), dtype=np.int64))
    assert psnr(a, b, peak=1.0) == pytest.approx(0.0)


@given(st.integers(0, 10_000))
def test_psnr_symmetric_and_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    a = rng.random((4, 6))
    b = rng.random((4, 6))
    assert psnr(a, b) == pytest.approx(psnr(b, a))
    perm = rng.permutation(a.size)
    ap = a.reshape(-1)[perm].reshape(a.shape)
    bp = b.reshape(-1)[perm].reshape(b.shape)
    assert psnr(ap, bp) == pytest.approx(psnr(a, b))


def test_psnr_global_pools_mse():
    a1, b1 = np.zeros((2, 2)), np.full((2, 2), 0.2)
    a2, b2 = np.zeros((2, 2)), np.zeros((2, 2))
    pooled_mse = (4 * 0.04 + 0) / 8
    assert psnr_global([a1, a2], [b1, b2]) == pytest.approx(
        10 * math.log10(1.0 / pooled_mse))


def test_psnr_frame_mean_skips_identical():
    a1, b1 = np.zeros((2, 2)), np.full((2, 2), 0.1)
    a2 = b2 = np.zeros((2, 2))
    assert psnr_frame_mean([a1, a2], [b1, b2]) == pytest.approx(20.0)


def make_report():
    return MetricsReport(dt=0.01, event_count=100, raw_bits=6400,
                         compressed_bits=640, payload_bits=500,
                         superframe_bits=14400, e2e_cr=10.0, io_cr=28.8,
                         psnr_db=math.inf, psnr_db_frame_mean=25.0,
                         model_file_bits=1234)


def test_report_text_format():
    text = make_report().to_text()
    assert "e2e_cr=10" in text
    assert "psnr_db=inf" in text
    assert all("=" in line for line in text.strip().splitlines())


def test_reports_to_csv():
    csv = reports_to_csv([make_report(), make_report()])
    lines = csv.strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("dt,event_count,raw_bits")
    assert lines[1].split(",")[1] == "100"


def test_mse_basic():
    assert mse(np.zeros((2, 2)), np.full((2, 2), 3.0)) == pytest.approx(9.0)
