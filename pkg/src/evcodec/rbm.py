"""Restricted Boltzmann machine: energy, conditionals, contrastive divergence.

Weights follow the convention ``weights[i, j]`` couples hidden unit ``i``
with visible unit ``j``, so the energy of a joint state is

    E(v, h) = -h.W.v - visible_bias.v - hidden_bias.h

Hidden units are logistic by default; the top layer of a code stack uses
``hidden_unit="linear"`` (mean c + W.v, unit-variance Gaussian noise when
sampled) so the downstream code layer stays real-valued.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

logger = logging.getLogger(__name__)

HIDDEN_KINDS = ("logistic", "linear")


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


@dataclass(frozen=True)
class RbmLayer:
    weights: np.ndarray       # (n_hidden, n_visible)
    visible_bias: np.ndarray  # (n_visible,)
    hidden_bias: np.ndarray   # (n_hidden,)
    hidden_unit: str = "logistic"

    def __post_init__(self):
        w, b, c = self.weights, self.visible_bias, self.hidden_bias
        if w.ndim != 2 or b.ndim != 1 or c.ndim != 1:
            raise ValueError("weights must be 2-D, biases 1-D")
        if w.shape != (len(c), len(b)):
            raise ValueError(f"weight shape {w.shape} does not match biases "
                             f"({len(c)}, {len(b)})")
        if not (np.isfinite(w).all() and np.isfinite(b).all() and np.isfinite(c).all()):
            raise ValueError("parameters must be finite")
        if self.hidden_unit not in HIDDEN_KINDS:
            raise ValueError(f"unknown hidden unit kind {self.hidden_unit!r}")

    @property
    def n_visible(self) -> int:
        return self.weights.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[0]


def init_layer(n_visible: int, n_hidden: int, rng: np.random.Generator,
               hidden_unit: str = "logistic", weight_sigma: float = 0.01) -> RbmLayer:
    """Zero biases, Gaussian weights with a small standard deviation."""
    weights = rng.normal(0.0, weight_sigma, size=(n_hidden, n_visible))
    return RbmLayer(weights, np.zeros(n_visible), np.zeros(n_hidden), hidden_unit)


def energy(layer: RbmLayer, v: np.ndarray, h: np.ndarray) -> float:
    """Joint energy of a (visible, hidden) configuration."""
    v = np.asarray(v, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if v.shape != (layer.n_visible,) or h.shape != (layer.n_hidden,):
        raise ValueError("state dimensions do not match the layer")
    return float(-h @ layer.weights @ v
                 - layer.visible_bias @ v
                 - layer.hidden_bias @ h)


def hidden_given_visible(layer: RbmLayer, v: np.ndarray) -> np.ndarray:
    """Hidden activation probabilities (or linear means) given visibles.

    Accepts a single vector or a batch with vectors as rows.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != layer.n_visible:
        raise ValueError(f"expected {layer.n_visible} visible units, got {v.shape[-1]}")
    pre = v @ layer.weights.T + layer.hidden_bias
    if layer.hidden_unit == "linear":
        return pre
    return sigmoid(pre)


def visible_given_hidden(layer: RbmLayer, h: np.ndarray) -> np.ndarray:
    """Visible activation probabilities given hiddens (vector or batch)."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != layer.n_hidden:
        raise ValueError(f"expected {layer.n_hidden} hidden units, got {h.shape[-1]}")
    return sigmoid(h @ layer.weights + layer.visible_bias)


def sample_hidden(layer: RbmLayer, activation: np.ndarray,
                  rng: np.random.Generator) -> np.ndarray:
    """Stochastic hidden state: Bernoulli draw, or mean plus N(0,1) noise.

    Consumes exactly one rng call of ``activation``'s shape, which the CD
    oracle tests rely on.
    """
    if layer.hidden_unit == "linear":
        return activation + rng.standard_normal(activation.shape)
    return (rng.random(activation.shape) < activation).astype(np.float64)


def cd_update(layer: RbmLayer, batch: np.ndarray, learning_rate: float,
              rng: np.random.Generator, steps: int = 1) -> RbmLayer:
    """One contrastive-divergence parameter update, averaged over the batch.

    Positive statistics pair the data with its hidden activations; negative
    statistics come from the reconstruction chain, which samples hidden
    states between steps but keeps probabilities for the statistics
    themselves.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[0] == 0:
        raise ValueError("empty batch")
    if batch.shape[1] != layer.n_visible:
        raise ValueError("batch width does not match the visible layer")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n = batch.shape[0]
    h_data = hidden_given_visible(layer, batch)
    h_state = sample_hidden(layer, h_data, rng)
    for step in range(steps):
        v_recon = visible_given_hidden(layer, h_state)
        h_recon = hidden_given_visible(layer, v_recon)
        if step < steps - 1:
            h_state = sample_hidden(layer, h_recon, rng)
    dw = (h_data.T @ batch - h_recon.T @ v_recon) / n
    db = (batch - v_recon).mean(axis=0)
    dc = (h_data - h_recon).mean(axis=0)
    return replace(layer,
                   weights=layer.weights + learning_rate * dw,
                   visible_bias=layer.visible_bias + learning_rate * db,
                   hidden_bias=layer.hidden_bias + learning_rate * dc)


def reconstruction_error(layer: RbmLayer, data: np.ndarray) -> float:
    """Mean squared error of the deterministic one-step reconstruction."""
    h = hidden_given_visible(layer, data)
    v = visible_given_hidden(layer, h)
    return float(np.mean((np.atleast_2d(data) - v) ** 2))


def train_rbm(data: np.ndarray, n_hidden: int, epochs: int, batch_size: int,
              learning_rate: float, rng: np.random.Generator,
              hidden_unit: str = "logistic", cd_steps: int = 1) -> tuple[RbmLayer, list[float]]:
    """Train one RBM with CD updates over shuffled mini-batches.

    Returns the layer and the reconstruction-error history, entry 0 being
    the error before any update.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] == 0:
        raise ValueError("empty training set")
    layer = init_layer(data.shape[1], n_hidden, rng, hidden_unit)
    history = [reconstruction_error(layer, data)]
    for epoch in range(epochs):
        order = rng.permutation(data.shape[0])
        for start in range(0, len(order), batch_size):
            batch = data[order[start:start + batch_size]]
            layer = cd_update(layer, batch, learning_rate, rng, cd_steps)
        history.append(reconstruction_error(layer, data))
        logger.info("rbm %d-%d epoch %d/%d: recon mse %.6f",
                    layer.n_visible, layer.n_hidden, epoch + 1, epochs,
                    history[-1])
    return layer, history
