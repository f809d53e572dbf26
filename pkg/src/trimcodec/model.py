"""Probability-prediction network over symbol cuboids.

The network maps a ``(W, H, C)`` cuboid of symbols drawn from an alphabet of
size ``m`` to a normalized ``(m, W, H, C)`` probability cuboid in one forward
pass: an input-masked trimmed conv, a hidden trimmed conv, a run of trimmed
residual blocks (two hidden convs with ReLUs plus an identity skip), and a
final hidden trimmed conv to ``m`` groups followed by a per-position softmax.
ReLU follows every convolution except the last.

Symbols enter as floats ``value / (m - 1)`` so binary cuboids become {0, 1}
planes with 0 as the default for not-yet-decoded positions.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .conv import TrimmedConv3d, hidden_layer, input_layer
from .masks import SCHEDULES
from .tensor import Rng

LN2 = math.log(2.0)
PROB_FLOOR = 2.0 ** -16
MODEL_MAGIC = b"TCAEMDL1"

_SCHEDULE_TAGS = {name: idx for idx, name in enumerate(SCHEDULES)}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; the layer stack is derived from these."""

    alphabet_size: int
    groups: int
    depth: int
    schedule: str
    residual_blocks: int = 4

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be at least 2")
        if self.groups < 1 or self.depth < 1 or self.residual_blocks < 0:
            raise ValueError("groups and depth must be positive, residual_blocks non-negative")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")

    @property
    def conv_count(self) -> int:
        return 3 + 2 * self.residual_blocks


class ContextModel:
    """Trimmed-convolution context model: config plus an ordered layer list.

    Layers: [input conv, hidden conv, (block conv a, block conv b) per
    residual block, final conv].  Treat a model as immutable once it is used
    for coding; the trainer mutates parameters in place and is the single
    writer.
    """

    def __init__(self, config: ModelConfig, layers: list[TrimmedConv3d]):
        if len(layers) != config.conv_count:
            raise ValueError(f"expected {config.conv_count} conv layers, got {len(layers)}")
        self.config = config
        self.layers = layers
        self._digest = None

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0, zero_final: bool = True) -> "ContextModel":
        """Seeded init; the final layer defaults to zero so the untrained
        model is exactly the uniform predictor."""
        layers = [input_layer(config.groups, config.depth, config.schedule, Rng(_mix(seed, 0)))]
        layers.append(hidden_layer(config.groups, config.groups, config.depth,
                                   config.schedule, Rng(_mix(seed, 1))))
        for b in range(config.residual_blocks):
            layers.append(hidden_layer(config.groups, config.groups, config.depth,
                                       config.schedule, Rng(_mix(seed, 2 + 2 * b))))
            layers.append(hidden_layer(config.groups, config.groups, config.depth,
                                       config.schedule, Rng(_mix(seed, 3 + 2 * b))))
        layers.append(hidden_layer(config.groups, config.alphabet_size, config.depth,
                                   config.schedule, Rng(_mix(seed, 2 + 2 * config.residual_blocks)),
                                   zero_init=zero_final))
        return cls(config, layers)

    def parameters(self) -> list[np.ndarray]:
        params = []
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.bias)
        return params

    def embed(self, cuboid: np.ndarray) -> np.ndarray:
        cfg = self.config
        cuboid = np.asarray(cuboid)
        if cuboid.ndim != 3 or cuboid.shape[2] != cfg.depth:
            raise ValueError(f"cuboid shape {cuboid.shape} does not match model depth {cfg.depth}")
        if cuboid.min() < 0 or cuboid.max() >= cfg.alphabet_size:
            raise ValueError(f"symbols must lie in [0, {cfg.alphabet_size})")
        return (cuboid.astype(np.float64) / (cfg.alphabet_size - 1))[None]

    def forward(self, cuboid: np.ndarray) -> np.ndarray:
        """One-pass probability prediction: ``(m, W, H, C)``, softmax per position."""
        logits = self._logits(self.embed(cuboid))
        return softmax_groups(logits)

    def _logits(self, x: np.ndarray, caches: list | None = None) -> np.ndarray:
        keep = caches is not None
        layers = self.layers

        h, cache = layers[0].forward_with_cache(x, keep_cache=keep)
        np.maximum(h, 0.0, out=h)
        if keep:
            caches.append((cache, h > 0))

        h2, cache = layers[1].forward_with_cache(h, keep_cache=keep)
        np.maximum(h2, 0.0, out=h2)
        if keep:
            caches.append((cache, h2 > 0))
        h = h2

        for b in range(self.config.residual_blocks):
            la = layers[2 + 2 * b]
            lb = layers[3 + 2 * b]
            a, cache_a = la.forward_with_cache(h, keep_cache=keep)
            np.maximum(a, 0.0, out=a)
            if keep:
                caches.append((cache_a, a > 0))
            z, cache_b = lb.forward_with_cache(a, keep_cache=keep)
            np.maximum(z, 0.0, out=z)
            if keep:
                caches.append((cache_b, z > 0))
            h = h + z

        logits, cache = layers[-1].forward_with_cache(h, keep_cache=keep)
        if keep:
            caches.append((cache, None))
        return logits

    def backward(self, cuboid: np.ndarray):
        """Gradient of the code-length objective w.r.t. every parameter.

        Returns ``(loss_bits, grads)`` with grads ordered like
        ``parameters()``.  Softmax and cross-entropy are combined
        analytically: the logit gradient is ``(p - onehot) / ln 2``.
        """
        caches: list = []
        logits = self._logits(self.embed(cuboid), caches)
        probs = softmax_groups(logits)
        loss = code_length_bits(probs, cuboid)

        m = self.config.alphabet_size
        onehot = np.zeros_like(probs)
        idx = np.asarray(cuboid)
        w, h, depth = idx.shape
        grid = np.ogrid[:w, :h, :depth]
        onehot[idx, grid[0], grid[1], grid[2]] = 1.0
        grad = (probs - onehot) / LN2

        grads_rev: list[np.ndarray] = []
        cache, _ = caches[-1]
        grad, gw, gb = self.layers[-1].backward(cache, grad)
        grads_rev += [gb, gw]

        for b in range(self.config.residual_blocks - 1, -1, -1):
            cache_b, mask_b = caches[2 + 2 * b + 1]
            cache_a, mask_a = caches[2 + 2 * b]
            gz = grad * mask_b
            ga, gw_b, gb_b = self.layers[3 + 2 * b].backward(cache_b, gz)
            ga *= mask_a
            gh, gw_a, gb_a = self.layers[2 + 2 * b].backward(cache_a, ga)
            grad = grad + gh
            grads_rev += [gb_b, gw_b, gb_a, gw_a]

        cache, mask = caches[1]
        grad = grad * mask
        grad, gw, gb = self.layers[1].backward(cache, grad)
        grads_rev += [gb, gw]

        cache, mask = caches[0]
        grad = grad * mask
        _, gw, gb = self.layers[0].backward(cache, grad, need_grad_x=False)
        grads_rev += [gb, gw]

        return loss, grads_rev[::-1]

    def digest(self) -> int:
        """64-bit FNV-1a of the serialized model; cached.

        Valid while the model is treated as immutable (i.e. after training).
        """
        if self._digest is None:
            self._digest = fnv1a64(save_model(self))
        return self._digest

    def invalidate_digest(self) -> None:
        self._digest = None


def _mix(seed: int, stream: int) -> int:
    return (int(seed) * 0x9E3779B97F4A7C15 + stream * 0xBF58476D1CE4E5B9 + 1) % 2**64


def softmax_groups(logits: np.ndarray) -> np.ndarray:
    """Softmax over axis 0 (the class axis), numerically stable."""
    shifted = logits - logits.max(axis=0, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=0, keepdims=True)
    return shifted


def code_length_bits(probs: np.ndarray, cuboid: np.ndarray) -> float:
    """Total code length in bits: sum of -log2 p(true symbol), floor-clamped."""
    idx = np.asarray(cuboid)
    if probs.shape[1:] != idx.shape:
        raise ValueError(f"probability cuboid {probs.shape} does not match symbols {idx.shape}")
    w, h, depth = idx.shape
    grid = np.ogrid[:w, :h, :depth]
    p_true = probs[idx, grid[0], grid[1], grid[2]]
    return float(-np.log2(np.maximum(p_true, PROB_FLOOR)).sum())


def compression_ratio(loss_bits: float, width: int, height: int, depth: int, alphabet_size: int) -> float:
    """Uncompressed size over compressed size for a cuboid of the given shape."""
    if loss_bits <= 0:
        raise ValueError("loss_bits must be positive")
    return depth * height * width * math.log2(alphabet_size) / loss_bits


def save_model(model: ContextModel) -> bytes:
    """Serialize: magic, config as u32 LE, parameters as f64 LE in layer order."""
    cfg = model.config
    out = bytearray(MODEL_MAGIC)
    out += struct.pack(
        "<5I", cfg.alphabet_size, cfg.groups, cfg.depth,
        _SCHEDULE_TAGS[cfg.schedule], cfg.residual_blocks)
    for param in model.parameters():
        out += param.astype("<f8").tobytes()
    return bytes(out)


def load_model(data: bytes) -> ContextModel:
    if data[:8] != MODEL_MAGIC:
        raise ValueError("not a model file: bad magic")
    if len(data) < 8 + 20:
        raise ValueError("model file truncated in header")
    m, groups, depth, sched_tag, blocks = struct.unpack_from("<5I", data, 8)
    if sched_tag >= len(SCHEDULES):
        raise ValueError(f"unknown schedule tag {sched_tag}")
    config = ModelConfig(m, groups, depth, SCHEDULES[sched_tag], blocks)
    model = ContextModel.initialize(config, seed=0)
    offset = 28
    for param in model.parameters():
        nbytes = param.size * 8
        chunk = data[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise ValueError("model file truncated in parameters")
        param[...] = np.frombuffer(chunk, dtype="<f8").reshape(param.shape)
        offset += nbytes
    if offset != len(data):
        raise ValueError(f"model file has {len(data) - offset} trailing bytes")
    return model


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) % 2**64
    return h
