"""Seeded synthetic gray-image corpora for training and tests.

Three kinds:

* ``constant``: every pixel of an image shares one gray level.
* ``iid-uniform``: pixels drawn uniformly from 0..255.
* ``markov-texture``: a two-level texture whose next bit is a deterministic
  function of the left, upper and upper-left neighbours XORed with
  Bernoulli(flip_prob) noise, so its entropy given any causal context is
  exactly the binary entropy of the flip probability.  Levels map to {0, 255},
  which makes all eight bit planes copies of the underlying field.
"""

from __future__ import annotations

import numpy as np

from .tensor import Rng

CORPUS_KINDS = ("constant", "iid-uniform", "markov-texture")


def markov_texture(width: int, height: int, flip_prob: float, gen: np.random.Generator) -> np.ndarray:
    """One (H, W) binary field of the texture process."""
    if not 0.0 < flip_prob < 0.5:
        raise ValueError("flip_prob must lie in (0, 0.5)")
    flips = (gen.random((height, width)) < flip_prob).astype(np.uint8)
    field = np.zeros((height, width), dtype=np.uint8)
    field[0, 0] = gen.integers(0, 2)
    for x in range(1, width):
        field[0, x] = field[0, x - 1] ^ flips[0, x]
    for y in range(1, height):
        field[y, 0] = field[y - 1, 0] ^ flips[y, 0]
        row = field[y]
        above = field[y - 1]
        for x in range(1, width):
            row[x] = row[x - 1] ^ above[x] ^ above[x - 1] ^ flips[y, x]
    return field


def generate_images(kind: str, count: int, size: int, seed: int,
                    flip_prob: float = 0.1) -> list[np.ndarray]:
    """``count`` seeded (size, size) uint8 images of the requested kind."""
    if kind not in CORPUS_KINDS:
        raise ValueError(f"unknown corpus kind {kind!r}, expected one of {CORPUS_KINDS}")
    if count < 1 or size < 1:
        raise ValueError("count and size must be positive")
    gen = Rng(seed).generator()
    images = []
    for _ in range(count):
        if kind == "constant":
            images.append(np.full((size, size), gen.integers(0, 256), dtype=np.uint8))
        elif kind == "iid-uniform":
            images.append(gen.integers(0, 256, size=(size, size), dtype=np.uint8))
        else:
            images.append(markov_texture(size, size, flip_prob, gen) * np.uint8(255))
    return images


def order0_entropy(values: np.ndarray) -> float:
    """Empirical order-0 entropy in bits per value."""
    values = np.asarray(values).ravel()
    if values.size == 0:
        raise ValueError("cannot estimate entropy of nothing")
    _, counts = np.unique(values, return_counts=True)
    p = counts / values.size
    return float(-(p * np.log2(p)).sum())


def bitplane_order0_entropy(images) -> float:
    """Order-0 entropy of the pooled bit-plane symbols of gray images."""
    bits = []
    for img in images:
        img = np.asarray(img, dtype=np.uint8)
        bits.append(((img[..., None] >> np.arange(8)) & 1).ravel())
    return order0_entropy(np.concatenate(bits))
