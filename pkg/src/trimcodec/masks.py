"""Kernel trimming masks and the coding-order predicates they realize.

A mask entry at relative offset ``(i, j, k)`` is 1 exactly when a value at
that offset is part of the causal context of the centre position under the
chosen coding schedule:

* ``raster`` schedule: positions are coded width-fastest, then height, then
  depth, so the context is the strict lexicographic past on ``(k, j, i)``.
* ``slope`` schedule: all positions on the plane ``i + j + k = t`` form one
  block; the context is every position on a strictly earlier plane.

Input-layer masks exclude the centre offset (the symbol being predicted is
not yet decodable); hidden-layer masks include it, because a hidden feature
at the centre was itself computed from causal context only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RASTER = "raster"
SLOPE = "slope"
SCHEDULES = (RASTER, SLOPE)

INPUT = "input"
HIDDEN = "hidden"
LAYER_KINDS = (INPUT, HIDDEN)


def _check_mode(schedule: str, layer_kind: str) -> None:
    if schedule not in SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}, expected one of {SCHEDULES}")
    if layer_kind not in LAYER_KINDS:
        raise ValueError(f"unknown layer kind {layer_kind!r}, expected one of {LAYER_KINDS}")


def mask_entry(schedule: str, layer_kind: str, i: int, j: int, k: int) -> int:
    """The 0/1 mask value at relative offset (i, j, k)."""
    _check_mode(schedule, layer_kind)
    if schedule == RASTER:
        if layer_kind == INPUT:
            keep = k < 0 or (k == 0 and j < 0) or (k == 0 and j == 0 and i < 0)
        else:
            keep = k < 0 or (k == 0 and j < 0) or (k == 0 and j == 0 and i <= 0)
    else:
        total = i + j + k
        keep = total < 0 if layer_kind == INPUT else total <= 0
    return int(keep)


@dataclass(frozen=True)
class KernelMask:
    """Binary trimming mask over a box of kernel offsets."""

    schedule: str
    layer_kind: str
    w0: int
    h0: int
    k_lo: int
    k_hi: int
    entries: np.ndarray = field(repr=False)

    def entry(self, i: int, j: int, k: int) -> int:
        if not (-self.w0 <= i <= self.w0 and -self.h0 <= j <= self.h0 and self.k_lo <= k <= self.k_hi):
            raise ValueError(f"offset ({i}, {j}, {k}) outside the mask box")
        return int(self.entries[i + self.w0, j + self.h0, k - self.k_lo])


def build_mask(schedule: str, layer_kind: str, w0: int, h0: int, k_lo: int, k_hi: int) -> KernelMask:
    """Build the trimming mask for offsets i in [-w0, w0], j in [-h0, h0], k in [k_lo, k_hi]."""
    _check_mode(schedule, layer_kind)
    if w0 < 0 or h0 < 0:
        raise ValueError("spatial half-widths must be non-negative")
    if not k_lo <= 0 <= k_hi:
        raise ValueError("depth offset range must contain 0")
    ii = np.arange(-w0, w0 + 1)[:, None, None]
    jj = np.arange(-h0, h0 + 1)[None, :, None]
    kk = np.arange(k_lo, k_hi + 1)[None, None, :]
    if schedule == RASTER:
        keep = (kk < 0) | ((kk == 0) & (jj < 0))
        if layer_kind == INPUT:
            keep = keep | ((kk == 0) & (jj == 0) & (ii < 0))
        else:
            keep = keep | ((kk == 0) & (jj == 0) & (ii <= 0))
    else:
        total = ii + jj + kk
        keep = total < 0 if layer_kind == INPUT else total <= 0
    entries = np.broadcast_to(keep, (2 * w0 + 1, 2 * h0 + 1, k_hi - k_lo + 1))
    entries = np.ascontiguousarray(entries.astype(np.float64))
    entries.setflags(write=False)
    return KernelMask(schedule, layer_kind, w0, h0, k_lo, k_hi, entries)


def in_coding_context(schedule: str, target, source) -> bool:
    """True iff ``source`` is coded strictly before ``target`` under the schedule."""
    p, q, r = (int(v) for v in target)
    i, j, k = (int(v) for v in source)
    if schedule == RASTER:
        return (k, j, i) < (r, q, p)
    if schedule == SLOPE:
        return i + j + k < p + q + r
    raise ValueError(f"unknown schedule {schedule!r}, expected one of {SCHEDULES}")
