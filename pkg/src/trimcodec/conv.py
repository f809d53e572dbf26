"""Trimmed 3D group convolution, forward and backward.

Feature maps have shape ``(groups, W, H, C)``.  Spatial kernels are 5x5 with
zero padding of 2 and stride 1; the depth axis is fully connected per output
slice: the weight tensor is indexed ``w[g_out, g_in, t, i, j, n]`` where
``t`` is the output depth slice and ``n`` the input depth slice.  The
trimming mask is evaluated on the relative offset ``(i - 2, j - 2, n - t)``
and multiplied into the weights at every application, so masked positions
contribute exactly 0.0 and receive zero gradient.

The forward pass lowers each call to one matmul (im2col); the backward pass
is its exact adjoint.  For a fixed input shape the float operations are
identical no matter what values sit at masked positions, which is the
property the codec's encoder/decoder agreement rests on.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .masks import HIDDEN, INPUT, build_mask
from .tensor import Rng, fill_random

KERNEL = 5
PAD = KERNEL // 2


def relative_slice_mask(schedule: str, layer_kind: str, depth: int) -> np.ndarray:
    """Mask array ``M[t, i, j, n]`` for output slice t and input slice n."""
    km = build_mask(schedule, layer_kind, PAD, PAD, -(depth - 1), depth - 1)
    # entries indexed by (i+2, j+2, k + depth - 1) with k = n - t
    t = np.arange(depth)[:, None, None, None]
    n = np.arange(depth)[None, None, None, :]
    i = np.arange(KERNEL)[None, :, None, None]
    j = np.arange(KERNEL)[None, None, :, None]
    out = km.entries[i, j, (n - t) + depth - 1]
    return np.ascontiguousarray(np.broadcast_to(out, (depth, KERNEL, KERNEL, depth)))


class TrimmedConv3d:
    """One masked group-convolution layer."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray, schedule: str, layer_kind: str):
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weights.ndim != 6 or weights.shape[3] != KERNEL or weights.shape[4] != KERNEL:
            raise ValueError(f"weights must have shape (g_out, g_in, C, {KERNEL}, {KERNEL}, C), got {weights.shape}")
        g_out, g_in, depth, _, _, depth_n = weights.shape
        if depth != depth_n:
            raise ValueError(f"output and input depth disagree: {depth} vs {depth_n}")
        if bias.shape != (g_out, depth):
            raise ValueError(f"bias must have shape ({g_out}, {depth}), got {bias.shape}")
        self.weights = weights
        self.bias = bias
        self.schedule = schedule
        self.layer_kind = layer_kind
        self.g_out = g_out
        self.g_in = g_in
        self.depth = depth
        self._mask = relative_slice_mask(schedule, layer_kind, depth)

    @classmethod
    def create(cls, g_in: int, g_out: int, depth: int, schedule: str, layer_kind: str,
               rng: Rng, zero_init: bool = False) -> "TrimmedConv3d":
        """Glorot-uniform init over the unmasked fan; optionally all-zero.

        Randomly initialized layers get a small positive bias so ReLU units
        start alive even where the mask leaves few incoming taps.
        """
        shape = (g_out, g_in, depth, KERNEL, KERNEL, depth)
        if zero_init:
            weights = np.zeros(shape)
            bias = np.zeros((g_out, depth))
        else:
            mask = relative_slice_mask(schedule, layer_kind, depth)
            live_per_slice = mask.sum() / depth  # mean unmasked taps per output slice
            fan_in = g_in * live_per_slice
            fan_out = g_out * live_per_slice
            limit = float(np.sqrt(6.0 / max(fan_in + fan_out, 1.0)))
            weights = fill_random(shape, "uniform", rng, lo=-limit, hi=limit)
            bias = np.full((g_out, depth), 0.1)
        return cls(weights, bias, schedule, layer_kind)

    def masked_weights(self) -> np.ndarray:
        return self.weights * self._mask[None, None]

    def _weight_matrix(self) -> np.ndarray:
        # (g_out, g_in, t, i, j, n) -> (g_in, i, j, n, g_out, t) -> (F, g_out*C)
        wm = self.masked_weights().transpose(1, 3, 4, 5, 0, 2)
        return np.ascontiguousarray(wm).reshape(-1, self.g_out * self.depth)

    def _patches(self, x: np.ndarray) -> np.ndarray:
        g_in, w, h, depth = x.shape
        xp = np.zeros((g_in, w + 2 * PAD, h + 2 * PAD, depth))
        xp[:, PAD:PAD + w, PAD:PAD + h, :] = x
        win = sliding_window_view(xp, (KERNEL, KERNEL), axis=(1, 2))  # (g, W, H, C, 5, 5)
        pat = np.ascontiguousarray(win.transpose(1, 2, 0, 4, 5, 3))
        return pat.reshape(w * h, g_in * KERNEL * KERNEL * depth)

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward_with_cache(x, keep_cache=False)
        return out

    def forward_with_cache(self, x: np.ndarray, keep_cache: bool = True):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[0] != self.g_in or x.shape[3] != self.depth:
            raise ValueError(
                f"input shape {x.shape} incompatible with layer "
                f"(g_in={self.g_in}, depth={self.depth})")
        _, w, h, depth = x.shape
        patches = self._patches(x)
        wmat = self._weight_matrix()
        out = patches @ wmat
        out += self.bias.reshape(-1)
        out = out.reshape(w, h, self.g_out, depth).transpose(2, 0, 1, 3)
        cache = (patches, wmat, (w, h)) if keep_cache else None
        return out, cache

    def backward(self, cache, grad_out: np.ndarray, need_grad_x: bool = True):
        """Adjoint of ``forward`` as a linear map in (x, weights, bias)."""
        patches, wmat, (w, h) = cache
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape != (self.g_out, w, h, self.depth):
            raise ValueError(f"grad_out shape {grad_out.shape} does not match forward output")
        grad_mat = np.ascontiguousarray(grad_out.transpose(1, 2, 0, 3)).reshape(w * h, -1)
        grad_b = grad_out.sum(axis=(1, 2))
        gw = patches.T @ grad_mat  # (F, g_out*C)
        gw = gw.reshape(self.g_in, KERNEL, KERNEL, self.depth, self.g_out, self.depth)
        grad_w = gw.transpose(4, 0, 5, 1, 2, 3) * self._mask[None, None]
        grad_x = None
        if need_grad_x:
            gp = (grad_mat @ wmat.T).reshape(w, h, self.g_in, KERNEL, KERNEL, self.depth)
            gxp = np.zeros((self.g_in, w + 2 * PAD, h + 2 * PAD, self.depth))
            for i in range(KERNEL):
                for j in range(KERNEL):
                    gxp[:, i:i + w, j:j + h, :] += gp[:, :, :, i, j, :].transpose(2, 0, 1, 3)
            grad_x = gxp[:, PAD:PAD + w, PAD:PAD + h, :]
        return grad_x, grad_w, grad_b


def input_layer(g_out: int, depth: int, schedule: str, rng: Rng, zero_init: bool = False) -> TrimmedConv3d:
    return TrimmedConv3d.create(1, g_out, depth, schedule, INPUT, rng, zero_init)


def hidden_layer(g_in: int, g_out: int, depth: int, schedule: str, rng: Rng,
                 zero_init: bool = False) -> TrimmedConv3d:
    return TrimmedConv3d.create(g_in, g_out, depth, schedule, HIDDEN, rng, zero_init)
