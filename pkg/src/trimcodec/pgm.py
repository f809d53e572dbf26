"""Binary PGM (P5, maxval <= 255) reader and writer.

Images are (H, W) uint8 arrays.  The writer emits the canonical header
``P5\\n<width> <height>\\n255\\n`` so that write/read round trips are
byte-exact.
"""

from __future__ import annotations

import numpy as np


class PgmError(ValueError):
    pass


def _tokens(data: bytes):
    """Whitespace-separated header tokens, skipping '#' comments."""
    pos = 0
    while pos < len(data):
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            yield data[pos:end], end
            pos = end


def parse_pgm(data: bytes) -> np.ndarray:
    it = _tokens(data)
    try:
        magic, _ = next(it)
        if magic != b"P5":
            raise PgmError(f"unsupported PNM magic {magic!r}; only binary P5 is handled")
        (width_tok, _), (height_tok, _), (maxval_tok, end) = next(it), next(it), next(it)
    except StopIteration:
        raise PgmError("truncated PGM header") from None
    try:
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    except ValueError:
        raise PgmError("malformed PGM header") from None
    if width < 1 or height < 1:
        raise PgmError(f"bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise PgmError(f"unsupported maxval {maxval}; only 8-bit PGM is handled")
    pixels = data[end + 1:]
    if len(pixels) < width * height:
        raise PgmError(f"PGM pixel data truncated: need {width * height}, have {len(pixels)}")
    return np.frombuffer(pixels[:width * height], dtype=np.uint8).reshape(height, width).copy()


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def encode_pgm(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.ndim != 2:
        raise PgmError(f"expected a 2-D gray image, got shape {image.shape}")
    if image.size and (image.min() < 0 or image.max() > 255):
        raise PgmError("pixel values must lie in [0, 255]")
    height, width = image.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + image.astype(np.uint8).tobytes()


def write_pgm(path, image: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(image))
