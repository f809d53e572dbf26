import numpy as np
import pytest

from trimcodec.tensor import Rng, as_tensor, elementwise, fill_random


class TestElementwise:
    def test_mul(self):
        np.testing.assert_array_equal(elementwise("mul", [1, 2], [3, 4]), [3, 8])

    def test_relu(self):
        np.testing.assert_array_equal(elementwise("relu", [-1, 2]), [0, 2])

    def test_add_scalar_identity(self):
        np.testing.assert_array_equal(elementwise("add", [0, 0], 0), [0, 0])

    def test_sub(self):
        np.testing.assert_array_equal(elementwise("sub", [3.0, 1.0], [1.0, 4.0]), [2.0, -3.0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            elementwise("add", [1, 2], [1, 2, 3])

    def test_unknown_op(self):
        with pytest.raises(ValueError, match="unknown elementwise op"):
            elementwise("div", [1.0], [2.0])

    def test_inputs_unmodified(self):
        a = np.array([1.0, -2.0])
        b = np.array([3.0, 4.0])
        elementwise("mul", a, b)
        elementwise("relu", a)
        np.testing.assert_array_equal(a, [1.0, -2.0])
        np.testing.assert_array_equal(b, [3.0, 4.0])

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            elementwise("add", [np.inf], [1.0])


class TestFillRandom:
    def test_uniform_deterministic(self):
        a = fill_random((3, 4), "uniform", Rng(7))
        b = fill_random((3, 4), "uniform", Rng(7))
        np.testing.assert_array_equal(a, b)

    def test_uniform_support(self):
        vals = fill_random((1000,), "uniform", Rng(1), lo=2, hi=3)
        assert vals.min() >= 2.0 and vals.max() < 3.0

    def test_normal_mean(self):
        # law-of-large-numbers bound for 1e4 standard normals
        vals = fill_random((10_000,), "normal", Rng(3))
        assert abs(vals.mean()) < 0.05

    def test_invalid_parameters(self):
        with pytest.raises(ValueError, match="lo < hi"):
            fill_random((2,), "uniform", Rng(0), lo=1.0, hi=1.0)
        with pytest.raises(ValueError, match="sigma > 0"):
            fill_random((2,), "normal", Rng(0), sigma=0.0)
        with pytest.raises(ValueError, match="unknown distribution"):
            fill_random((2,), "poisson", Rng(0))


class TestLayout:
    def test_flatten_reshape_roundtrip(self):
        arr = as_tensor(np.arange(24.0).reshape(2, 3, 4))
        np.testing.assert_array_equal(arr.ravel().reshape(2, 3, 4), arr)

    def test_row_major_default(self):
        arr = as_tensor([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(arr.ravel(), [1.0, 2.0, 3.0, 4.0])


def test_rng_validation():
    with pytest.raises(ValueError):
        Rng(-1)
    with pytest.raises(ValueError):
        Rng(0, algorithm="mersenne")
