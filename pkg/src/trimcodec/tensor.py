"""Dense float64 arrays plus seeded randomness for the rest of the package.

Everything downstream works on plain numpy arrays in row-major order; this
module pins the conventions (64-bit floats, finiteness after every public
operation, reproducible PCG64 streams) and provides the few bulk operations
the numeric code needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ELEMENTWISE_OPS = ("add", "sub", "mul", "relu")


@dataclass(frozen=True)
class Rng:
    """Named, reproducible random source: one seed, one PCG64 stream."""

    seed: int
    algorithm: str = "pcg64"

    def __post_init__(self):
        if self.algorithm != "pcg64":
            raise ValueError(f"unsupported rng algorithm: {self.algorithm!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of the seed's stream."""
        return np.random.Generator(np.random.PCG64(self.seed))


def as_tensor(values) -> np.ndarray:
    """Coerce to a float64 array and reject non-finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    check_finite(arr, "tensor")
    return arr


def check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")


def elementwise(op: str, a, b=None) -> np.ndarray:
    """Apply a binary op (or unary relu) elementwise.

    ``b`` may be a scalar or an array of the same shape as ``a``; the result
    always has ``a``'s shape.  Inputs are never modified.
    """
    if op not in ELEMENTWISE_OPS:
        raise ValueError(f"unknown elementwise op {op!r}, expected one of {ELEMENTWISE_OPS}")
    a = as_tensor(a)
    if op == "relu":
        if b is not None:
            raise ValueError("relu takes a single operand")
        out = np.maximum(a, 0.0)
    else:
        if b is None:
            raise ValueError(f"{op} needs a second operand")
        b_arr = as_tensor(b)
        if b_arr.ndim != 0 and b_arr.shape != a.shape:
            raise ValueError(f"shape mismatch: {a.shape} vs {b_arr.shape}")
        if op == "add":
            out = a + b_arr
        elif op == "sub":
            out = a - b_arr
        else:
            out = a * b_arr
    check_finite(out, f"elementwise {op} result")
    return out


def fill_random(shape, dist: str, rng: Rng, **params) -> np.ndarray:
    """Draw a tensor from ``uniform(lo, hi)`` or ``normal(mean, sigma)``.

    Identical ``rng`` seeds give identical tensors.
    """
    gen = rng.generator()
    if dist == "uniform":
        lo = float(params.pop("lo", 0.0))
        hi = float(params.pop("hi", 1.0))
        if params:
            raise ValueError(f"unexpected uniform parameters: {sorted(params)}")
        if not lo < hi:
            raise ValueError(f"uniform needs lo < hi, got [{lo}, {hi})")
        out = gen.uniform(lo, hi, size=shape)
    elif dist == "normal":
        mean = float(params.pop("mean", 0.0))
        sigma = float(params.pop("sigma", 1.0))
        if params:
            raise ValueError(f"unexpected normal parameters: {sorted(params)}")
        if not sigma > 0:
            raise ValueError(f"normal needs sigma > 0, got {sigma}")
        out = gen.normal(mean, sigma, size=shape)
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    return np.asarray(out, dtype=np.float64)
