"""Stacked-RBM autoencoder: greedy pretraining, unrolling, fine-tuning.

The stack is trained layer by layer with contrastive divergence, unrolled
into a mirror-symmetric encoder/decoder with untied weights, then
fine-tuned end to end.  Fine-tuning minimizes the summed cross-entropy
between [0,1] inputs and logistic reconstructions with Polak-Ribiere
conjugate-gradient steps (backtracking line search, three searches per
mini-batch, restart on non-descent).

The code layer is linear; its integer quantization is plain rounding at a
configurable scale recorded next to the weights in the model file.
"""

from __future__ import annotations

import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .container import ByteReader, SYMBOL_MAX
from .errors import ModelFormatError, TrainingDivergedError
from .rbm import RbmLayer, hidden_given_visible, sigmoid, train_rbm
from .superframe import BLOCK_SIZE, Block

logger = logging.getLogger(__name__)

DEFAULT_LAYER_SIZES = (BLOCK_SIZE * BLOCK_SIZE, 1000, 500, 250, 20)

MODEL_MAGIC = b"EVDBN"
MODEL_VERSION = 1

_ACTIVATION_TAGS = {"logistic": 0, "linear": 1}
_TAG_ACTIVATIONS = {v: k for k, v in _ACTIVATION_TAGS.items()}

# conjugate-gradient internals (pinned, not user configuration)
_CG_LINE_SEARCHES = 3
_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 30
_MAX_STEP = 2.0  # warm-start cap; larger steps overfit single mini-batches


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 10
    learning_rate: float = 0.1
    cd_steps: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.cd_steps < 1:
            raise ValueError("cd_steps must be >= 1")


@dataclass(frozen=True)
class LatentBlock:
    """Quantized latent code of one block: a short run of integers."""

    symbols: np.ndarray

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.int64)
        if symbols.ndim != 1:
            raise ValueError("latent symbols must be a flat sequence")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass
class DbnModel:
    """Unrolled autoencoder weights plus the codec-side constants.

    ``encoder_weights[i]`` maps layer i activations to layer i+1
    pre-activations (shape out x in); decoder lists run top-down back to
    the input size.  Activation tags are "logistic" or "linear".
    """

    layer_sizes: tuple[int, ...]
    encoder_weights: list[np.ndarray]
    encoder_biases: list[np.ndarray]
    decoder_weights: list[np.ndarray]
    decoder_biases: list[np.ndarray]
    encoder_activations: tuple[str, ...]
    decoder_activations: tuple[str, ...]
    norm_scale: float = 1.0
    quant_scale: float = 1.0
    sensor_size: tuple[int, int] | None = None

    def __post_init__(self):
        n = len(self.layer_sizes)
        if n < 2:
            raise ValueError("need at least two layer sizes")
        down = tuple(reversed(self.layer_sizes))
        for seq, weights, biases in (
            (self.layer_sizes, self.encoder_weights, self.encoder_biases),
            (down, self.decoder_weights, self.decoder_biases),
        ):
            if len(weights) != n - 1 or len(biases) != n - 1:
                raise ValueError("one weight matrix and bias per layer transition")
            for i, (w, b) in enumerate(zip(weights, biases)):
                if w.shape != (seq[i + 1], seq[i]) or b.shape != (seq[i + 1],):
                    raise ValueError(
                        f"layer {i} expects weights {(seq[i + 1], seq[i])}, "
                        f"got {w.shape} with bias {b.shape}")

    @property
    def code_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    def clone(self) -> "DbnModel":
        return DbnModel(self.layer_sizes,
                        [w.copy() for w in self.encoder_weights],
                        [b.copy() for b in self.encoder_biases],
                        [w.copy() for w in self.decoder_weights],
                        [b.copy() for b in self.decoder_biases],
                        self.encoder_activations, self.decoder_activations,
                        self.norm_scale, self.quant_scale, self.sensor_size)


def pretrain(data: np.ndarray, cfg: TrainConfig,
             layer_sizes: tuple[int, ...] = DEFAULT_LAYER_SIZES) -> list[RbmLayer]:
    """Greedy layer-by-layer RBM training.

    Each layer trains on the previous layer's deterministic hidden
    activations; the top layer uses linear hidden units so the code stays
    real-valued.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] == 0:
        raise ValueError("empty training set")
    if data.shape[1] != layer_sizes[0]:
        raise ValueError(f"training vectors have width {data.shape[1]}, "
                         f"expected {layer_sizes[0]}")
    rng = np.random.default_rng(cfg.seed)
    stack: list[RbmLayer] = []
    for depth in range(len(layer_sizes) - 1):
        top = depth == len(layer_sizes) - 2
        kind = "linear" if top else "logistic"
        # linear-unit RBMs need a much smaller CD step to stay stable
        lr = cfg.learning_rate * (0.01 if kind == "linear" else 1.0)
        layer, history = train_rbm(data, layer_sizes[depth + 1], cfg.epochs,
                                   cfg.batch_size, lr, rng,
                                   hidden_unit=kind, cd_steps=cfg.cd_steps)
        logger.info("pretrained %d-%d rbm (%s hidden): recon mse %.5f -> %.5f",
                    layer_sizes[depth], layer_sizes[depth + 1], kind,
                    history[0], history[-1])
        stack.append(layer)
        if not top:
            data = hidden_given_visible(layer, data)
    return stack


def unroll(stack: list[RbmLayer]) -> DbnModel:
    """Unfold a pretrained stack into an untied encoder/decoder pair.

    The encoder reuses each RBM's weights bottom-up; the decoder starts as
    the transposed weights top-down with the visible biases.  Copies are
    independent so fine-tuning can move the two sides apart.
    """
    if not stack:
        raise ValueError("empty stack")
    for lower, upper in zip(stack, stack[1:]):
        if upper.n_visible != lower.n_hidden:
            raise ValueError(
                f"stack does not chain: {lower.n_hidden} hidden feeding "
                f"{upper.n_visible} visible")
    sizes = (stack[0].n_visible,) + tuple(layer.n_hidden for layer in stack)
    encoder_weights = [layer.weights.copy() for layer in stack]
    encoder_biases = [layer.hidden_bias.copy() for layer in stack]
    decoder_weights = [layer.weights.T.copy() for layer in reversed(stack)]
    decoder_biases = [layer.visible_bias.copy() for layer in reversed(stack)]
    enc_act = tuple("linear" if layer.hidden_unit == "linear" else "logistic"
                    for layer in stack)
    dec_act = tuple("logistic" for _ in stack)
    return DbnModel(sizes, encoder_weights, encoder_biases,
                    decoder_weights, decoder_biases, enc_act, dec_act)


def _layers(model: DbnModel):
    for w, b, act in zip(model.encoder_weights, model.encoder_biases,
                         model.encoder_activations):
        yield w, b, act
    for w, b, act in zip(model.decoder_weights, model.decoder_biases,
                         model.decoder_activations):
        yield w, b, act


def _forward(model: DbnModel, X: np.ndarray):
    """Activations and pre-activations for every layer of the full net."""
    acts = [X]
    pres = []
    a = X
    for w, b, act in _layers(model):
        z = a @ w.T + b
        a = z if act == "linear" else sigmoid(z)
        pres.append(z)
        acts.append(a)
    return acts, pres


def reconstruction_loss(model: DbnModel, X: np.ndarray) -> float:
    """Summed cross-entropy per example, averaged over the batch."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _, pres = _forward(model, X)
    z = pres[-1]
    ce = np.maximum(z, 0.0) - z * X + np.log1p(np.exp(-np.abs(z)))
    return float(ce.sum(axis=1).mean())


def _loss_and_grads(model: DbnModel, X: np.ndarray):
    """Loss plus per-parameter gradients via reverse-mode differentiation."""
    if model.decoder_activations[-1] != "logistic":
        raise ValueError("cross-entropy loss requires a logistic output layer")
    n = X.shape[0]
    acts, pres = _forward(model, X)
    z = pres[-1]
    ce = np.maximum(z, 0.0) - z * X + np.log1p(np.exp(-np.abs(z)))
    loss = float(ce.sum(axis=1).mean())
    layers = list(_layers(model))
    grad_w = [None] * len(layers)
    grad_b = [None] * len(layers)
    delta = (sigmoid(z) - X) / n
    for i in range(len(layers) - 1, -1, -1):
        w, _, act = layers[i]
        if i < len(layers) - 1:
            a = acts[i + 1]
            delta = delta if act == "linear" else delta * a * (1.0 - a)
        grad_w[i] = delta.T @ acts[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ w
    k = len(model.encoder_weights)
    return loss, (grad_w[:k], grad_b[:k], grad_w[k:], grad_b[k:])


def _pack(model: DbnModel) -> np.ndarray:
    parts = []
    for w, b, _ in _layers(model):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def _unpack_into(model: DbnModel, theta: np.ndarray) -> None:
    pos = 0
    for w, b, _ in _layers(model):
        w[...] = theta[pos:pos + w.size].reshape(w.shape)
        pos += w.size
        b[...] = theta[pos:pos + b.size]
        pos += b.size


def _pack_grads(grads) -> np.ndarray:
    enc_w, enc_b, dec_w, dec_b = grads
    parts = []
    for w, b in zip(enc_w + dec_w, enc_b + dec_b):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def loss_and_gradient(model: DbnModel, X: np.ndarray) -> tuple[float, np.ndarray]:
    """Flat-vector view of the fine-tuning objective, for optimizers and tests."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    loss, grads = _loss_and_grads(model, X)
    return loss, _pack_grads(grads)


def fine_tune(model: DbnModel, data: np.ndarray, cfg: TrainConfig) -> DbnModel:
    """Conjugate-gradient refinement of the unrolled network.

    Deterministic forward passes; Polak-Ribiere directions with a
    backtracking Armijo line search, three searches per mini-batch, and a
    steepest-descent restart whenever the direction stops descending.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] == 0:
        raise ValueError("empty training set")
    model = model.clone()
    rng = np.random.default_rng(cfg.seed)
    theta = _pack(model)
    step = 1.0  # carried between batches so the line search starts warm

    def objective(vec: np.ndarray) -> float:
        _unpack_into(model, vec)
        return reconstruction_loss(model, batch)

    def objective_grad(vec: np.ndarray):
        _unpack_into(model, vec)
        loss, grads = _loss_and_grads(model, batch)
        return loss, _pack_grads(grads)

    for epoch in range(cfg.epochs):
        order = rng.permutation(data.shape[0])
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = data[order[start:start + cfg.batch_size]]
            f, g = objective_grad(theta)
            if not np.isfinite(f):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {n_batches}")
            d = -g
            for _ in range(_CG_LINE_SEARCHES):
                slope = float(g @ d)
                if slope >= 0.0:
                    d = -g
                    slope = -float(g @ g)
                if slope == 0.0:
                    break
                alpha, f_new = _backtrack(objective, theta, d, f, slope, step)
                if alpha is None:
                    if np.array_equal(d, -g):
                        break
                    d = -g
                    slope = -float(g @ g)
                    alpha, f_new = _backtrack(objective, theta, d, f, slope, step)
                    if alpha is None:
                        break
                theta = theta + alpha * d
                step = min(alpha * 2.0, _MAX_STEP)
                g_prev = g
                f, g = objective_grad(theta)
                if not np.isfinite(f) or not np.all(np.isfinite(g)):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, batch {n_batches}")
                denom = float(g_prev @ g_prev)
                beta = max(0.0, float(g @ (g - g_prev)) / denom) if denom else 0.0
                d = -g + beta * d
            epoch_loss += f
            n_batches += 1
        logger.info("fine-tune epoch %d/%d: mean batch loss %.4f",
                    epoch + 1, cfg.epochs, epoch_loss / max(n_batches, 1))
    _unpack_into(model, theta)
    return model


def _backtrack(objective, theta, d, f0, slope, step0):
    alpha = step0
    for _ in range(_MAX_BACKTRACKS):
        f1 = objective(theta + alpha * d)
        if np.isfinite(f1) and f1 <= f0 + _ARMIJO_C1 * alpha * slope:
            return alpha, f1
        alpha *= 0.5
    return None, f0


def encode(model: DbnModel, X: np.ndarray) -> np.ndarray:
    """Deterministic encoder pass; rows of X are flattened blocks."""
    a = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if a.shape[1] != model.input_size:
        raise ValueError(f"expected {model.input_size} inputs, got {a.shape[1]}")
    for w, b, act in zip(model.encoder_weights, model.encoder_biases,
                         model.encoder_activations):
        z = a @ w.T + b
        a = z if act == "linear" else sigmoid(z)
    return a


def decode(model: DbnModel, Z: np.ndarray) -> np.ndarray:
    """Deterministic decoder pass from latent codes back to block vectors."""
    a = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if a.shape[1] != model.code_size:
        raise ValueError(f"expected {model.code_size} code values, got {a.shape[1]}")
    for w, b, act in zip(model.decoder_weights, model.decoder_biases,
                         model.decoder_activations):
        z = a @ w.T + b
        a = z if act == "linear" else sigmoid(z)
    return a


def encode_block(model: DbnModel, block: Block) -> np.ndarray:
    return encode(model, block.values.reshape(1, -1))[0]


def decode_block(model: DbnModel, latent: LatentBlock, frame_index: int = 0,
                 origin_row: int = 0, origin_col: int = 0) -> Block:
    if len(latent) != model.code_size:
        raise ValueError(f"latent length {len(latent)} does not match the "
                         f"code layer ({model.code_size})")
    code = dequantize(latent.symbols, model.quant_scale)
    values = decode(model, code.reshape(1, -1))[0]
    edge = int(round(model.input_size ** 0.5))
    if edge * edge != model.input_size:
        raise ValueError(f"model input width {model.input_size} is not square")
    return Block(frame_index, origin_row, origin_col,
                 np.clip(values, 0.0, 1.0).reshape(edge, edge))


def quantize(code: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Round code * scale to integers, ties away from zero."""
    scaled = np.asarray(code, dtype=np.float64) * scale
    if not np.isfinite(scaled).all():
        raise ValueError("cannot quantize non-finite code values")
    symbols = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    if np.abs(symbols).max(initial=0.0) > SYMBOL_MAX:
        raise OverflowError("quantized value exceeds the 32-bit symbol range")
    return symbols.astype(np.int64)


def dequantize(symbols: np.ndarray, scale: float = 1.0) -> np.ndarray:
    return np.asarray(symbols, dtype=np.float64) / scale


def model_to_bytes(model: DbnModel) -> bytes:
    out = bytearray()
    out += MODEL_MAGIC
    out += struct.pack("<B", MODEL_VERSION)
    sw, sh = model.sensor_size if model.sensor_size else (0, 0)
    out += struct.pack("<II", sw, sh)
    out += struct.pack("<B", len(model.layer_sizes))
    for size in model.layer_sizes:
        out += struct.pack("<I", size)
    for act in model.encoder_activations:
        out += struct.pack("<B", _ACTIVATION_TAGS[act])
    for act in model.decoder_activations:
        out += struct.pack("<B", _ACTIVATION_TAGS[act])
    out += struct.pack("<dd", model.norm_scale, model.quant_scale)
    for w, b, _ in _layers(model):
        out += np.ascontiguousarray(w, dtype="<f8").tobytes()
        out += np.ascontiguousarray(b, dtype="<f8").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def model_from_bytes(data: bytes) -> DbnModel:
    if len(data) < 4:
        raise ModelFormatError("input shorter than a checksum")
    stored = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) != stored:
        raise ModelFormatError("model file checksum mismatch")
    rd = ByteReader(data[:-4], error=ModelFormatError)
    if rd.take(5) != MODEL_MAGIC:
        raise ModelFormatError("bad magic, not a model file")
    version = rd.u8()
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    sw, sh = rd.u32(), rd.u32()
    n_sizes = rd.u8()
    sizes = tuple(rd.u32() for _ in range(n_sizes))
    if n_sizes < 2:
        raise ModelFormatError("model needs at least two layer sizes")
    try:
        enc_act = tuple(_TAG_ACTIVATIONS[rd.u8()] for _ in range(n_sizes - 1))
        dec_act = tuple(_TAG_ACTIVATIONS[rd.u8()] for _ in range(n_sizes - 1))
    except KeyError:
        raise ModelFormatError("unknown activation tag") from None
    norm_scale, quant_scale = rd.f64(), rd.f64()

    def matrix(rows: int, cols: int) -> np.ndarray:
        return np.frombuffer(rd.take(rows * cols * 8), dtype="<f8").reshape(
            rows, cols).copy()

    def vector(n: int) -> np.ndarray:
        return np.frombuffer(rd.take(n * 8), dtype="<f8").copy()

    enc_w = []
    enc_b = []
    for i in range(n_sizes - 1):
        enc_w.append(matrix(sizes[i + 1], sizes[i]))
        enc_b.append(vector(sizes[i + 1]))
    down = tuple(reversed(sizes))
    dec_w = []
    dec_b = []
    for i in range(n_sizes - 1):
        dec_w.append(matrix(down[i + 1], down[i]))
        dec_b.append(vector(down[i + 1]))
    if rd.pos != len(rd.data):
        raise ModelFormatError("trailing bytes after model weights")
    return DbnModel(sizes, enc_w, enc_b, dec_w, dec_b, enc_act, dec_act,
                    norm_scale, quant_scale,
                    (sw, sh) if (sw, sh) != (0, 0) else None)


def save_model(path, model: DbnModel) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path) -> DbnModel:
    return model_from_bytes(Path(path).read_bytes())
