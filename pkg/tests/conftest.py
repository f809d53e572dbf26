"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from trimcodec.conv import KERNEL, PAD, TrimmedConv3d
from trimcodec.model import ContextModel, ModelConfig


def naive_trimmed_conv(x, layer):
    """Loop-based masked correlation; the independent oracle for the
    vectorized forward pass."""
    g_in, width, height, depth = x.shape
    wm = layer.masked_weights()
    out = np.zeros((layer.g_out, width, height, depth))
    for go in range(layer.g_out):
        for p in range(width):
            for q in range(height):
                for t in range(depth):
                    acc = layer.bias[go, t]
                    for gi in range(g_in):
                        for i in range(KERNEL):
                            for j in range(KERNEL):
                                pi = p + i - PAD
                                qj = q + j - PAD
                                if not (0 <= pi < width and 0 <= qj < height):
                                    continue
                                for n in range(depth):
                                    acc += x[gi, pi, qj, n] * wm[go, gi, t, i, j, n]
                    out[go, p, q, t] = acc
    return out


def small_model(schedule="raster", m=2, groups=2, depth=2, blocks=1, seed=0,
                zero_final=False):
    config = ModelConfig(alphabet_size=m, groups=groups, depth=depth,
                         schedule=schedule, residual_blocks=blocks)
    return ContextModel.initialize(config, seed=seed, zero_final=zero_final)


def random_cuboid(rng, shape, m=2):
    return rng.integers(0, m, size=shape)


def structural_reach(model, shape, target):
    """Positions with a nonzero path to ``target`` through the masked network.

    Probes with all-ones weights, zero bias and identity activations:
    weights are non-negative so nothing cancels, making the result exactly
    the architecture's influence support.
    """
    probes = [TrimmedConv3d(np.ones_like(l.weights), np.zeros_like(l.bias),
                            l.schedule, l.layer_kind) for l in model.layers]
    h = np.zeros((1,) + tuple(shape))
    caches = []
    for probe in probes:
        h, cache = probe.forward_with_cache(h)
        caches.append(cache)
    cfg = model.config
    grad = np.zeros((cfg.alphabet_size,) + tuple(shape))
    grad[:, target[0], target[1], target[2]] = 1.0
    grad, _, _ = probes[-1].backward(caches[-1], grad)
    for b in range(cfg.residual_blocks - 1, -1, -1):
        gz, _, _ = probes[3 + 2 * b].backward(caches[3 + 2 * b], grad)
        gh, _, _ = probes[2 + 2 * b].backward(caches[2 + 2 * b], gz)
        grad = grad + gh
    grad, _, _ = probes[1].backward(caches[1], grad)
    grad, _, _ = probes[0].backward(caches[0], grad, need_grad_x=True)
    return grad[0] > 0


@pytest.fixture(scope="session")
def constant_corpus_images():
    from trimcodec.synthetic import generate_images

    return generate_images("constant", 12, 10, seed=31)


@pytest.fixture(scope="session")
def constant_bitplane_model(constant_corpus_images):
    """Raster bit-plane model trained on constant images; shared by the
    inpainting tests.  Trained far enough that in-corpus gray levels are
    completed near-deterministically."""
    from trimcodec.codec import to_bitplanes
    from trimcodec.training import train

    cuboids = [to_bitplanes(img) for img in constant_corpus_images]
    model = small_model(schedule="raster", m=2, groups=4, depth=8, blocks=1,
                        seed=5, zero_final=True)
    train(model, cuboids, batch_size=2, max_steps=1500, eval_interval=200,
          patience=3, seed=5)
    return model
