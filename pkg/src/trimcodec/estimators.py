"""Scikit-learn style estimators wrapping the context model and codec.

``CuboidCompressor.fit`` trains a context model on symbol cuboids;
``transform`` compresses each cuboid to bytes and ``inverse_transform``
restores them exactly.  ``GrayImageCompressor`` does the same for 8-bit gray
images via the bit-plane representation.  Both follow the usual estimator
conventions (constructor params stored verbatim, fitted state in trailing
underscore attributes, ``get_params``/``set_params``/``clone`` supported).
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import codec
from .masks import SCHEDULES
from .model import ContextModel, ModelConfig
from .training import train
from .validation import check_cuboid_list, check_image_list


class CuboidCompressor(TransformerMixin, BaseEstimator):
    """Lossless compressor for (W, H, C) symbol cuboids.

    Parameters mirror the trainer: the model architecture (``groups``,
    ``residual_blocks``, ``schedule``), the coding tile size, and the
    training budget.  ``alphabet_size=None`` infers the alphabet from the
    training data.
    """

    def __init__(self, schedule: str = "raster", groups: int = 4, residual_blocks: int = 1,
                 alphabet_size: int | None = None, tile_size: int = 0, batch_size: int = 2,
                 max_steps: int = 1000, eval_interval: int = 100, patience: int = 3,
                 seed: int = 0):
        self.schedule = schedule
        self.groups = groups
        self.residual_blocks = residual_blocks
        self.alphabet_size = alphabet_size
        self.tile_size = tile_size
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.eval_interval = eval_interval
        self.patience = patience
        self.seed = seed

    def _validate(self, X) -> list[np.ndarray]:
        return check_cuboid_list(X, getattr(self, "model_", None) and self.model_.config.alphabet_size)

    def fit(self, X, y=None):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        cuboids = check_cuboid_list(X, self.alphabet_size)
        m = self.alphabet_size
        if m is None:
            m = max(2, int(max(c.max() for c in cuboids)) + 1)
        depth = cuboids[0].shape[2]
        config = ModelConfig(alphabet_size=m, groups=self.groups, depth=depth,
                             schedule=self.schedule, residual_blocks=self.residual_blocks)
        model = ContextModel.initialize(config, seed=self.seed)
        result = train(model, cuboids, batch_size=self.batch_size, max_steps=self.max_steps,
                       eval_interval=self.eval_interval, patience=self.patience, seed=self.seed)
        self.model_ = model
        self.history_ = result.history
        self.n_training_steps_ = result.steps
        return self

    def _require_fitted(self) -> ContextModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError("this compressor is not fitted; call fit or assign model_")
        return model

    def transform(self, X) -> list[bytes]:
        model = self._require_fitted()
        return [codec.encode_cuboid(c, model, self.tile_size).blob for c in self._validate(X)]

    def inverse_transform(self, Xt) -> list[np.ndarray]:
        model = self._require_fitted()
        return [codec.decode_cuboid(blob, model).cuboid for blob in Xt]

    def predict_proba(self, X) -> list[np.ndarray]:
        """Per-cuboid (m, W, H, C) probability predictions."""
        model = self._require_fitted()
        return [model.forward(c) for c in self._validate(X)]

    def score(self, X, y=None) -> float:
        """Mean achieved compression ratio (uncompressed bits / payload bits)."""
        model = self._require_fitted()
        ratios = []
        for c in self._validate(X):
            result = codec.encode_cuboid(c, model, self.tile_size)
            w, h, depth = c.shape
            raw_bits = w * h * depth * math.log2(model.config.alphabet_size)
            ratios.append(raw_bits / result.payload_bits)
        return float(np.mean(ratios))


class GrayImageCompressor(TransformerMixin, BaseEstimator):
    """Lossless 8-bit gray-image compressor over bit-plane cuboids."""

    def __init__(self, schedule: str = "raster", groups: int = 4, residual_blocks: int = 1,
                 tile_size: int = 0, batch_size: int = 2, max_steps: int = 1000,
                 eval_interval: int = 100, patience: int = 3, seed: int = 0):
        self.schedule = schedule
        self.groups = groups
        self.residual_blocks = residual_blocks
        self.tile_size = tile_size
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.eval_interval = eval_interval
        self.patience = patience
        self.seed = seed

    def _delegate(self) -> CuboidCompressor:
        inner = CuboidCompressor(schedule=self.schedule, groups=self.groups,
                                 residual_blocks=self.residual_blocks, alphabet_size=2,
                                 tile_size=self.tile_size, batch_size=self.batch_size,
                                 max_steps=self.max_steps, eval_interval=self.eval_interval,
                                 patience=self.patience, seed=self.seed)
        if hasattr(self, "model_"):
            inner.model_ = self.model_
        return inner

    def fit(self, X, y=None):
        images = check_image_list(X)
        inner = self._delegate().fit([codec.to_bitplanes(img) for img in images])
        self.model_ = inner.model_
        self.history_ = inner.history_
        self.n_training_steps_ = inner.n_training_steps_
        return self

    def transform(self, X) -> list[bytes]:
        return self._delegate().transform([codec.to_bitplanes(i) for i in check_image_list(X)])

    def inverse_transform(self, Xt) -> list[np.ndarray]:
        return [codec.from_bitplanes(c) for c in self._delegate().inverse_transform(Xt)]

    def score(self, X, y=None) -> float:
        return self._delegate().score([codec.to_bitplanes(i) for i in check_image_list(X)])
