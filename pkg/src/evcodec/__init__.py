"""Event-camera stream codec.

Events are aggregated into polarity-split super-frames, each 30x30 block
is reduced to a short integer latent code by a stacked-RBM autoencoder,
and the symbols are Huffman-packed into a checksummed container.  The
inverse path reconstructs super-frames; metrics report compression ratios
and PSNR.
"""

from .baseline import delta_huffman, external_compress, huffman_raw
from .codec import compress, decompress, evaluate
from .container import CompressedStream, read_stream, write_stream
from .dbn import (DEFAULT_LAYER_SIZES, DbnModel, LatentBlock, TrainConfig,
                  decode, decode_block, dequantize, encode, encode_block,
                  fine_tune, load_model, pretrain, quantize, save_model,
                  unroll)
from .errors import (ChecksumError, CodecError, ConfigError,
                     ContainerFormatError, EventFormatError, MismatchError,
                     ModelFormatError, TrainingDivergedError)
from .estimator import BlockAutoencoder
from .events import (Event, EventStream, load_events, parse_events,
                     raw_size_bits, save_events)
from .huffman import SymbolTable, build_table, decode_symbols, encode_symbols
from .metrics import MetricsReport, e2e_cr, io_cr, psnr
from .rbm import RbmLayer, cd_update, energy, hidden_given_visible, visible_given_hidden
from .superframe import (BLOCK_SIZE, Block, Normalizer, SuperFrame, aggregate,
                         block_grid, fit_normalizer, from_blocks, to_blocks)

__version__ = "0.1.0"

__all__ = [
    "BLOCK_SIZE", "Block", "BlockAutoencoder", "ChecksumError", "CodecError",
    "CompressedStream", "ConfigError", "ContainerFormatError",
    "DEFAULT_LAYER_SIZES", "DbnModel", "Event", "EventFormatError",
    "EventStream", "LatentBlock", "MetricsReport", "MismatchError",
    "ModelFormatError", "Normalizer", "RbmLayer", "SuperFrame", "SymbolTable",
    "TrainConfig", "TrainingDivergedError", "aggregate", "block_grid",
    "build_table", "cd_update", "compress", "decode", "decode_block",
    "decode_symbols", "decompress", "delta_huffman", "dequantize", "e2e_cr",
    "encode", "encode_block", "encode_symbols", "energy", "evaluate",
    "external_compress", "fine_tune", "fit_normalizer", "from_blocks",
    "hidden_given_visible", "huffman_raw", "io_cr", "load_events",
    "load_model", "parse_events", "pretrain", "psnr", "quantize",
    "raw_size_bits", "read_stream", "save_events", "save_model", "to_blocks",
    "unroll", "visible_given_hidden", "write_stream",
]
