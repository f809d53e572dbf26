"""End-to-end cuboid compression: schedules, tiling, container, inpainting.

A symbol cuboid is a ``(W, H, C)`` integer array with symbols below the
alphabet size.  Encoding runs one model pass per (sub)cuboid, quantizes the
predicted PMF at every position in coding order and feeds the range coder.
Decoding reconstructs symbols against a zero-initialized cuboid, recomputing
a full model pass per symbol (raster) or per slope block; mask causality
makes the partially-filled prediction identical to the encoder's, float for
float, so the streams invert exactly.

Container layout (all integers little-endian): an 8-byte magic, u32 version,
u32 schedule tag, u32 W/H/C/m, u32 tile size (0 = untiled), u64 FNV-1a model
digest, u64 payload length, then one u32-length-prefixed range-coder payload
per tile in row-major tile order.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .coder import ArithmeticDecoder, ArithmeticEncoder, CodecError, QuantizedPmf, quantize_pmf
from .masks import RASTER, SCHEDULES, SLOPE
from .model import PROB_FLOOR, ContextModel
from .tensor import Rng

MAGIC = b"TRIMCDC1"
VERSION = 1
HEADER_BYTES = 8 + 4 * 7 + 8 + 8

_SCHEDULE_TAGS = {name: idx for idx, name in enumerate(SCHEDULES)}


@dataclass(frozen=True)
class CodecHeader:
    schedule: str
    width: int
    height: int
    depth: int
    alphabet_size: int
    tile_size: int
    model_digest: int
    payload_length: int

    def pack(self) -> bytes:
        return MAGIC + struct.pack(
            "<7I2Q", VERSION, _SCHEDULE_TAGS[self.schedule],
            self.width, self.height, self.depth, self.alphabet_size,
            self.tile_size, self.model_digest, self.payload_length)

    @classmethod
    def unpack(cls, data: bytes) -> "CodecHeader":
        if len(data) < HEADER_BYTES:
            raise CodecError("container truncated in header")
        if data[:8] != MAGIC:
            raise CodecError("not a compressed container: bad magic")
        version, sched, w, h, c, m, tile, digest, payload = struct.unpack_from("<7I2Q", data, 8)
        if version != VERSION:
            raise CodecError(f"unsupported container version {version}")
        if sched >= len(SCHEDULES):
            raise CodecError(f"unknown schedule tag {sched}")
        return cls(SCHEDULES[sched], w, h, c, m, tile, digest, payload)


@dataclass(frozen=True)
class SlopeBlock:
    """All positions with i + j + k = t, ordered ascending by (k, i)."""

    t: int
    positions: np.ndarray  # (n, 3) int array of (i, j, k)


@dataclass(frozen=True)
class EncodeResult:
    blob: bytes
    payload_bits: int
    forward_passes: int
    pmf_digest: str | None = None


@dataclass(frozen=True)
class DecodeResult:
    cuboid: np.ndarray
    forward_passes: int
    header: CodecHeader
    pmf_digest: str | None = None


def to_bitplanes(image: np.ndarray) -> np.ndarray:
    """Gray image (H, W) in 0..255 to a binary (W, H, 8) cuboid; plane k
    holds bit 7 - k, so plane 0 is the most significant bit."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D gray image, got shape {image.shape}")
    if image.min() < 0 or image.max() > 255:
        raise ValueError("pixel values must lie in [0, 255]")
    pixels = image.astype(np.uint8).T  # (W, H)
    planes = np.arange(8)
    return ((pixels[:, :, None] >> (7 - planes)) & 1).astype(np.int64)


def from_bitplanes(cuboid: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_bitplanes`."""
    cuboid = np.asarray(cuboid)
    if cuboid.ndim != 3 or cuboid.shape[2] != 8:
        raise ValueError(f"expected a (W, H, 8) cuboid, got shape {cuboid.shape}")
    if cuboid.min() < 0 or cuboid.max() > 1:
        raise ValueError("bit planes must be binary")
    planes = np.arange(8)
    pixels = (cuboid.astype(np.int64) << (7 - planes)).sum(axis=2)
    return pixels.T.astype(np.uint8)


def raster_order(width: int, height: int, depth: int) -> np.ndarray:
    """Coding order positions (i, j, k): i fastest, then j, then k."""
    if min(width, height, depth) < 1:
        raise ValueError("extents must be positive")
    k, j, i = np.meshgrid(np.arange(depth), np.arange(height), np.arange(width),
                          indexing="ij")
    return np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1)


def slope_blocks(width: int, height: int, depth: int) -> list[SlopeBlock]:
    """Blocks CB_t for t = 0 .. (W-1)+(H-1)+(C-1), positions sorted by (k, i)."""
    if min(width, height, depth) < 1:
        raise ValueError("extents must be positive")
    blocks = []
    for t in range(width + height + depth - 2):
        rows = []
        k_lo = max(0, t - (width - 1) - (height - 1))
        for k in range(k_lo, min(depth - 1, t) + 1):
            s = t - k
            i_lo = max(0, s - (height - 1))
            for i in range(i_lo, min(width - 1, s) + 1):
                rows.append((i, s - i, k))
        blocks.append(SlopeBlock(t, np.array(rows, dtype=np.int64).reshape(-1, 3)))
    return blocks


def schedule_order(schedule: str, width: int, height: int, depth: int) -> np.ndarray:
    if schedule == RASTER:
        return raster_order(width, height, depth)
    if schedule == SLOPE:
        return np.concatenate([b.positions for b in slope_blocks(width, height, depth)])
    raise ValueError(f"unknown schedule {schedule!r}")


def _check_cuboid_for_model(cuboid: np.ndarray, model: ContextModel) -> np.ndarray:
    cuboid = np.asarray(cuboid)
    cfg = model.config
    if cuboid.ndim != 3:
        raise ValueError(f"expected a (W, H, C) cuboid, got shape {cuboid.shape}")
    if cuboid.shape[2] != cfg.depth:
        raise ValueError(f"cuboid depth {cuboid.shape[2]} does not match model depth {cfg.depth}")
    if cuboid.size and (cuboid.min() < 0 or cuboid.max() >= cfg.alphabet_size):
        raise ValueError(f"symbols must lie in [0, {cfg.alphabet_size})")
    return cuboid.astype(np.int64)


def _tile_ranges(extent: int, tile: int) -> list[tuple[int, int]]:
    if tile <= 0:
        return [(0, extent)]
    return [(lo, min(lo + tile, extent)) for lo in range(0, extent, tile)]


def _position_pmf(probs: np.ndarray, pos) -> QuantizedPmf:
    p = np.maximum(probs[:, pos[0], pos[1], pos[2]], PROB_FLOOR)
    return quantize_pmf(p)


def encode_cuboid(cuboid: np.ndarray, model: ContextModel, tile_size: int = 0,
                  collect_pmf_digest: bool = False) -> EncodeResult:
    """Compress a cuboid into a self-describing container.

    One model pass per tile predicts every position's PMF; symbols stream to
    the range coder in the model schedule's coding order.
    """
    cuboid = _check_cuboid_for_model(cuboid, model)
    if tile_size < 0:
        raise ValueError("tile size must be non-negative")
    w, h, depth = cuboid.shape
    schedule = model.config.schedule
    hasher = hashlib.sha256() if collect_pmf_digest else None

    payload = bytearray()
    passes = 0
    coded_bits = 0
    for i_lo, i_hi in _tile_ranges(w, tile_size):
        for j_lo, j_hi in _tile_ranges(h, tile_size):
            tile = cuboid[i_lo:i_hi, j_lo:j_hi, :]
            probs = model.forward(tile)
            passes += 1
            enc = ArithmeticEncoder()
            for pos in schedule_order(schedule, *tile.shape):
                pmf = _position_pmf(probs, pos)
                if hasher is not None:
                    hasher.update(pmf.counts.astype("<u2").tobytes())
                enc.encode(pmf, int(tile[pos[0], pos[1], pos[2]]))
            coded = enc.finish()
            coded_bits += 8 * len(coded)
            payload += struct.pack("<I", len(coded))
            payload += coded

    header = CodecHeader(schedule, w, h, depth, model.config.alphabet_size,
                         tile_size, model.digest(), len(payload))
    return EncodeResult(header.pack() + bytes(payload), coded_bits, passes,
                        hasher.hexdigest() if hasher else None)


def split_tiles(blob: bytes) -> tuple[CodecHeader, list[tuple[tuple[int, int, int, int], bytes]]]:
    """Header plus one ``((i_lo, i_hi, j_lo, j_hi), coded_bytes)`` per tile.

    Tiles carry independent coder streams, so each entry can be decoded on
    its own (and therefore in parallel).
    """
    header = CodecHeader.unpack(blob)
    body = blob[HEADER_BYTES:]
    if len(body) != header.payload_length:
        raise CodecError(f"payload length mismatch: header says {header.payload_length}, "
                         f"container holds {len(body)}")
    tiles = []
    offset = 0
    for i_lo, i_hi in _tile_ranges(header.width, header.tile_size):
        for j_lo, j_hi in _tile_ranges(header.height, header.tile_size):
            if offset + 4 > len(body):
                raise CodecError("container truncated in tile table")
            (n,) = struct.unpack_from("<I", body, offset)
            offset += 4
            coded = body[offset:offset + n]
            if len(coded) != n:
                raise CodecError("container truncated in tile payload")
            offset += n
            tiles.append(((i_lo, i_hi, j_lo, j_hi), coded))
    if offset != len(body):
        raise CodecError(f"container has {len(body) - offset} trailing payload bytes")
    return header, tiles


def decode_tile(coded: bytes, model: ContextModel, width: int, height: int,
                hasher=None) -> tuple[np.ndarray, int]:
    """Decode one tile's stream; returns the cuboid and the pass count."""
    depth = model.config.depth
    schedule = model.config.schedule
    cuboid = np.zeros((width, height, depth), dtype=np.int64)
    dec = ArithmeticDecoder(coded)
    passes = 0
    if schedule == RASTER:
        for pos in raster_order(width, height, depth):
            probs = model.forward(cuboid)
            passes += 1
            pmf = _position_pmf(probs, pos)
            if hasher is not None:
                hasher.update(pmf.counts.astype("<u2").tobytes())
            cuboid[pos[0], pos[1], pos[2]] = dec.decode(pmf)
    else:
        for block in slope_blocks(width, height, depth):
            probs = model.forward(cuboid)
            passes += 1
            for pos in block.positions:
                pmf = _position_pmf(probs, pos)
                if hasher is not None:
                    hasher.update(pmf.counts.astype("<u2").tobytes())
                cuboid[pos[0], pos[1], pos[2]] = dec.decode(pmf)
    dec.check_complete()
    return cuboid, passes


def decode_cuboid(blob: bytes, model: ContextModel,
                  collect_pmf_digest: bool = False) -> DecodeResult:
    """Exact inverse of :func:`encode_cuboid` for a matching model."""
    header, tiles = split_tiles(blob)
    cfg = model.config
    if header.schedule != cfg.schedule:
        raise CodecError(f"container was coded with the {header.schedule} schedule, "
                         f"model uses {cfg.schedule}")
    if header.alphabet_size != cfg.alphabet_size or header.depth != cfg.depth:
        raise CodecError("container alphabet/depth does not match the model")
    if header.model_digest != model.digest():
        raise CodecError("container was coded with a different model")
    hasher = hashlib.sha256() if collect_pmf_digest else None
    out = np.zeros((header.width, header.height, header.depth), dtype=np.int64)
    passes = 0
    for (i_lo, i_hi, j_lo, j_hi), coded in tiles:
        tile, tile_passes = decode_tile(coded, model, i_hi - i_lo, j_hi - j_lo, hasher)
        out[i_lo:i_hi, j_lo:j_hi, :] = tile
        passes += tile_passes
    return DecodeResult(out, passes, header, hasher.hexdigest() if hasher else None)


def inpaint(image: np.ndarray, region: tuple[int, int, int, int], model: ContextModel,
            rng: Rng) -> np.ndarray:
    """Resample the bit planes inside ``region`` from the model, pixel bits in
    coding order; everything outside the region is untouched.

    ``region`` is ``(x, y, w, h)`` in image coordinates (x across width).
    """
    if model.config.schedule != RASTER:
        raise ValueError("inpainting walks positions serially and needs a raster model")
    if model.config.alphabet_size != 2 or model.config.depth != 8:
        raise ValueError("inpainting expects a binary bit-plane model (m=2, C=8)")
    image = np.asarray(image)
    height, width = image.shape
    x, y, w, h = (int(v) for v in region)
    if w < 0 or h < 0 or x < 0 or y < 0 or x + w > width or y + h > height:
        raise ValueError(f"region {region} outside a {width}x{height} image")
    if w == 0 or h == 0:
        return image.copy()
    cuboid = to_bitplanes(image)
    cuboid[x:x + w, y:y + h, :] = 0
    gen = rng.generator()
    for pos in raster_order(width, height, 8):
        i, j, k = (int(v) for v in pos)
        if not (x <= i < x + w and y <= j < y + h):
            continue
        probs = model.forward(cuboid)
        p_one = float(probs[1, i, j, k])
        cuboid[i, j, k] = 1 if gen.random() < p_one else 0
    return from_bitplanes(cuboid)
