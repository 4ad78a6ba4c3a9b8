"""Scikit-learn style front end for the block autoencoder.

``BlockAutoencoder`` wraps the pretrain / unroll / fine-tune recipe behind
the usual fit/transform surface so the latent coder composes with
pipelines and grid search.  ``transform`` yields real-valued latent codes;
``inverse_transform`` maps codes back to block vectors.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import dbn
from .dbn import DEFAULT_LAYER_SIZES, TrainConfig


class BlockAutoencoder(BaseEstimator, TransformerMixin):
    """Deep-belief-network autoencoder over flattened count blocks.

    Parameters
    ----------
    layer_sizes : tuple of int
        Unit counts from the input layer down to the code layer.
    epochs : int
        Training epochs, used for both the greedy pretraining of each
        layer and the conjugate-gradient fine-tuning pass.
    batch_size : int
        Mini-batch size for both phases.
    learning_rate : float
        Contrastive-divergence step size.
    cd_steps : int
        Gibbs steps per contrastive-divergence update.
    quant_scale : float
        Quantization scale recorded on the fitted model.
    random_state : int
        Seed for weight initialization and batch shuffling.

    Attributes
    ----------
    model_ : DbnModel
        The fitted encoder/decoder weights.
    loss_ : float
        Reconstruction loss on the training data after fitting.
    """

    def __init__(self, layer_sizes=DEFAULT_LAYER_SIZES, epochs=20, batch_size=10,
                 learning_rate=0.1, cd_steps=1, quant_scale=1.0, random_state=0):
        self.layer_sizes = layer_sizes
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.cd_steps = cd_steps
        self.quant_scale = quant_scale
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate,
                           cd_steps=self.cd_steps, seed=self.random_state)

    def _validate(self, X, width: int):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != width:
            raise ValueError(f"expected {width} columns, got {X.shape[1]}")
        return X

    def fit(self, X, y=None):
        """Pretrain the RBM stack on X, unroll it, and fine-tune end to end."""
        X = self._validate(X, self.layer_sizes[0])
        if X.min() < 0.0 or X.max() > 1.0:
            raise ValueError("training values must lie in [0, 1]")
        cfg = self._config()
        stack = dbn.pretrain(X, cfg, tuple(self.layer_sizes))
        model = dbn.unroll(stack)
        model = dbn.fine_tune(model, X, cfg)
        model.quant_scale = float(self.quant_scale)
        self.model_ = model
        self.loss_ = dbn.reconstruction_loss(model, X)
        return self

    def transform(self, X) -> np.ndarray:
        """Latent codes (real-valued, code-layer width) for each row of X."""
        check_is_fitted(self, "model_")
        X = self._validate(X, self.model_.input_size)
        return dbn.encode(self.model_, X)

    def inverse_transform(self, Z) -> np.ndarray:
        """Reconstructed block vectors for each latent code row."""
        check_is_fitted(self, "model_")
        Z = self._validate(Z, self.model_.code_size)
        return dbn.decode(self.model_, Z)

    def score(self, X, y=None) -> float:
        """Negative reconstruction cross-entropy (higher is better)."""
        check_is_fitted(self, "model_")
        X = self._validate(X, self.model_.input_size)
        return -dbn.reconstruction_loss(self.model_, X)
