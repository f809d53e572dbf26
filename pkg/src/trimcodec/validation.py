"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np


def check_cuboid(x, alphabet_size: int | None = None) -> np.ndarray:
    """Validate one (W, H, C) integer symbol cuboid."""
    arr = np.asarray(x)
    if arr.ndim != 3:
        raise ValueError(f"expected a (W, H, C) cuboid, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("cuboid extents must be positive")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.array_equal(rounded, arr):
            raise ValueError("symbols must be integers")
        arr = rounded
    arr = arr.astype(np.int64)
    if arr.min() < 0:
        raise ValueError("symbols must be non-negative")
    if alphabet_size is not None and arr.max() >= alphabet_size:
        raise ValueError(f"symbols must be below the alphabet size {alphabet_size}")
    return arr


def check_cuboid_list(X, alphabet_size: int | None = None) -> list[np.ndarray]:
    """Validate a list (or stacked 4-D array) of cuboids sharing one depth."""
    if isinstance(X, np.ndarray) and X.ndim == 4:
        X = list(X)
    if not isinstance(X, (list, tuple)) or len(X) == 0:
        raise ValueError("expected a non-empty list of (W, H, C) cuboids")
    cuboids = [check_cuboid(x, alphabet_size) for x in X]
    depth = cuboids[0].shape[2]
    for c in cuboids:
        if c.shape[2] != depth:
            raise ValueError(f"cuboids must share one depth; saw {c.shape[2]} and {depth}")
    return cuboids


def check_gray_image(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty (H, W) gray image, got shape {arr.shape}")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("pixel values must lie in [0, 255]")
    return arr.astype(np.uint8)


def check_image_list(X) -> list[np.ndarray]:
    if isinstance(X, np.ndarray) and X.ndim == 3:
        X = list(X)
    if not isinstance(X, (list, tuple)) or len(X) == 0:
        raise ValueError("expected a non-empty list of (H, W) gray images")
    return [check_gray_image(x) for x in X]


def check_region(region) -> tuple[int, int, int, int]:
    try:
        x, y, w, h = (int(v) for v in region)
    except (TypeError, ValueError):
        raise ValueError(f"region must be (x, y, w, h), got {region!r}") from None
    if min(x, y, w, h) < 0:
        raise ValueError(f"region components must be non-negative, got {region!r}")
    return x, y, w, h
