import numpy as np
import pytest

from trimcodec.synthetic import (bitplane_order0_entropy, generate_images,
                                 markov_texture, order0_entropy)
from trimcodec.tensor import Rng


def test_constant_images():
    images = generate_images("constant", 5, 8, seed=1)
    for img in images:
        assert img.shape == (8, 8)
        assert (img == img[0, 0]).all()


def test_seeded_reproducibility():
    for kind in ("constant", "iid-uniform", "markov-texture"):
        a = generate_images(kind, 3, 16, seed=9)
        b = generate_images(kind, 3, 16, seed=9)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


def test_iid_uniform_entropy_near_eight_bits():
    images = generate_images("iid-uniform", 32, 64, seed=2)
    h = order0_entropy(np.stack(images))
    assert h == pytest.approx(8.0, rel=0.01)


def test_markov_texture_is_two_level():
    images = generate_images("markov-texture", 4, 32, seed=3)
    for img in images:
        assert set(np.unique(img)) <= {0, 255}


def test_markov_order0_entropy_near_one_bit_per_plane():
    images = generate_images("markov-texture", 24, 32, seed=4)
    h = bitplane_order0_entropy(images)
    assert h == pytest.approx(1.0, abs=0.02)


def test_markov_conditional_entropy_matches_flip_probability():
    # counting estimate of H(bit | left, up, up-left) against the closed form
    flip = 0.1
    closed_form = -(flip * np.log2(flip) + (1 - flip) * np.log2(1 - flip))
    assert closed_form == pytest.approx(0.469, abs=5e-4)
    gen = Rng(5).generator()
    fields = [markov_texture(64, 64, flip, gen) for _ in range(8)]
    joint = np.zeros((8, 2))
    for f in fields:
        ctx = (f[1:, 1:] * 0 + 4 * f[1:, :-1] + 2 * f[:-1, 1:] + f[:-1, :-1])
        np.add.at(joint, (ctx.ravel(), f[1:, 1:].ravel()), 1)
    totals = joint.sum(axis=1, keepdims=True)
    cond = joint / np.maximum(totals, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(joint > 0, -cond * np.log2(np.where(cond > 0, cond, 1.0)), 0.0)
    h_cond = float((terms.sum(axis=1) * (totals.ravel() / totals.sum())).sum())
    assert h_cond == pytest.approx(closed_form, abs=0.02)


def test_validation():
    with pytest.raises(ValueError, match="unknown corpus kind"):
        generate_images("perlin", 1, 8, seed=0)
    with pytest.raises(ValueError):
        generate_images("constant", 0, 8, seed=0)
    with pytest.raises(ValueError, match="flip_prob"):
        markov_texture(4, 4, 0.7, Rng(0).generator())
    with pytest.raises(ValueError):
        order0_entropy(np.array([]))
