"""End-to-end pipeline: events -> super-frames -> latent symbols -> container.

Compression aggregates the stream at the requested window, normalizes with
the model's training-time scale, encodes every block through the
autoencoder, quantizes the codes, and Huffman-packs the symbols into one
container with a single global table.  Decompression inverts each stage
and reassembles super-frames in window order.
"""

from __future__ import annotations

import logging
from collections import Counter

import numpy as np

from . import container, dbn, huffman, metrics
from .container import CompressedStream
from .dbn import DbnModel
from .errors import MismatchError
from .events import EventStream, raw_size_bits
from .metrics import MetricsReport
from .superframe import (BLOCK_SIZE, Block, Normalizer, SuperFrame, aggregate,
                         block_grid, blocks_to_matrix, from_blocks, to_blocks)

logger = logging.getLogger(__name__)


def check_geometry(model: DbnModel, sensor_width: int, sensor_height: int) -> None:
    if model.sensor_size is not None and model.sensor_size != (sensor_width, sensor_height):
        raise MismatchError(
            f"model was trained for sensor {model.sensor_size[0]}x"
            f"{model.sensor_size[1]}, stream is {sensor_width}x{sensor_height}")


def compress(stream: EventStream, model: DbnModel, dt: float) -> bytes:
    """Compress a stream at aggregation window dt into container bytes."""
    check_geometry(model, stream.sensor_width, stream.sensor_height)
    if model.input_size != BLOCK_SIZE * BLOCK_SIZE:
        raise MismatchError(
            f"model input width {model.input_size} is not a "
            f"{BLOCK_SIZE}x{BLOCK_SIZE} block")
    w, h = stream.sensor_width, stream.sensor_height
    rows, cols = block_grid(w, h)
    frames = aggregate(stream, dt)
    norm = Normalizer(model.norm_scale)
    all_symbols: list[int] = []
    for frame in frames:
        blocks = to_blocks(frame, norm)
        codes = dbn.encode(model, blocks_to_matrix(blocks))
        symbols = dbn.quantize(codes, model.quant_scale)
        all_symbols.extend(symbols.reshape(-1).tolist())
    t0 = float(stream.t[0]) if len(stream) else 0.0
    if all_symbols:
        table = huffman.build_table(Counter(all_symbols))
        payload, payload_bits = huffman.encode_symbols(all_symbols, table)
    else:
        table, payload, payload_bits = None, b"", 0
    cs = CompressedStream(
        sensor_width=w, sensor_height=h, dt=dt, t0=t0,
        frame_count=len(frames), block_rows=rows, block_cols=cols,
        code_size=model.code_size, norm_scale=model.norm_scale,
        quant_scale=model.quant_scale, table=table,
        n_symbols=len(all_symbols), payload=payload, payload_bits=payload_bits)
    return container.write_stream(cs)


def decompress(data: bytes, model: DbnModel) -> list[SuperFrame]:
    """Decode container bytes back into reconstructed super-frames."""
    cs = container.read_stream(data)
    if cs.quant_scale != model.quant_scale:
        raise MismatchError(
            f"container quantization scale {cs.quant_scale} does not match "
            f"the model ({model.quant_scale})")
    if cs.norm_scale != model.norm_scale:
        raise MismatchError(
            f"container normalizer scale {cs.norm_scale} does not match "
            f"the model ({model.norm_scale})")
    if cs.code_size != model.code_size:
        raise MismatchError(
            f"container code size {cs.code_size} does not match the model "
            f"({model.code_size})")
    check_geometry(model, cs.sensor_width, cs.sensor_height)
    rows, cols = block_grid(cs.sensor_width, cs.sensor_height)
    if (rows, cols) != (cs.block_rows, cs.block_cols):
        raise MismatchError("container block grid does not match its geometry")
    if cs.n_symbols == 0:
        return []
    symbols = huffman.decode_symbols(cs.payload, cs.payload_bits, cs.table,
                                     cs.n_symbols)
    codes = dbn.dequantize(
        np.array(symbols, dtype=np.int64).reshape(-1, cs.code_size),
        cs.quant_scale)
    values = dbn.decode(model, codes)
    norm = Normalizer(cs.norm_scale)
    per_frame = rows * cols
    frames = []
    for idx in range(cs.frame_count):
        blocks = []
        for j in range(per_frame):
            r, c = divmod(j, cols)
            vec = values[idx * per_frame + j]
            blocks.append(Block(idx, r * BLOCK_SIZE, c * BLOCK_SIZE,
                                vec.reshape(BLOCK_SIZE, BLOCK_SIZE)))
        frames.append(from_blocks(blocks, cs.sensor_width, cs.sensor_height,
                                  norm, window_index=idx,
                                  t_start=cs.t0 + idx * cs.dt, dt=cs.dt))
    return frames


def normalized_grid(frame: SuperFrame, scale: float) -> np.ndarray:
    """Saturating normalization, the codec's reconstruction target."""
    return np.minimum(frame.counts, scale) / scale


def evaluate(stream: EventStream, model: DbnModel, dt: float,
             model_file_bits: int = 0) -> MetricsReport:
    """Compress, decompress, and measure one aggregation window."""
    data = compress(stream, model, dt)
    cs = container.read_stream(data)
    recon = decompress(data, model)
    originals = aggregate(stream, dt)
    orig_grids = [normalized_grid(f, model.norm_scale) for f in originals]
    recon_grids = [normalized_grid(f, model.norm_scale) for f in recon]
    raw = raw_size_bits(stream)
    compressed_bits = len(data) * 8
    frame_bits = metrics.superframe_bits(originals)
    if orig_grids:
        psnr_db = metrics.psnr_global(orig_grids, recon_grids)
        psnr_mean = metrics.psnr_frame_mean(orig_grids, recon_grids)
    else:
        psnr_db = psnr_mean = float("nan")
    report = MetricsReport(
        dt=dt,
        event_count=len(stream),
        raw_bits=raw,
        compressed_bits=compressed_bits,
        payload_bits=cs.payload_bits,
        superframe_bits=frame_bits,
        e2e_cr=metrics.e2e_cr(raw, compressed_bits),
        io_cr=metrics.io_cr(frame_bits, cs.payload_bits) if cs.payload_bits else float("nan"),
        psnr_db=psnr_db,
        psnr_db_frame_mean=psnr_mean,
        model_file_bits=model_file_bits)
    logger.info("dt=%.4gms: e2e_cr=%.3f io_cr=%.3f psnr=%.2fdB",
                dt * 1e3, report.e2e_cr, report.io_cr, report.psnr_db)
    return report
