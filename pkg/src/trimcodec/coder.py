"""Bit-exact multi-symbol arithmetic coder plus an exact-rational reference.

Probabilities are quantized to 16-bit counts that sum to exactly 2**16, so
encoder and decoder subdivide intervals identically.  The coder keeps its
interval *exactly*: ``low`` and ``range`` are arbitrary-precision integers
scaled by 2**scale_bits, every symbol refines them with no rounding at all,
and a byte is emitted the moment its value is determined (the top byte of
``low`` and of ``low + range - 1`` agree).  Emitted bytes are final - there
is no carry propagation - and the state left in the coder is proportional to
the entropy still unresolved, which stays small at the cuboid sizes this
package targets.

Because the nesting is exact, the final integer interval *is* the rational
oracle's interval for the quantized model, and the flush - the shortest
byte-aligned binary fraction inside the final interval - is therefore always
contained in it.  The flush length is fixed by the final state alone, which
lets the decoder recompute the exact stream length and reject truncated or
oversized streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

PROB_BITS = 16
PROB_SCALE = 1 << PROB_BITS
MAX_ALPHABET = 1 << 15


class CodecError(ValueError):
    """Corrupt, truncated or internally inconsistent coded data."""


class Bitstream:
    """Byte buffer with a bit cursor; most significant bit first."""

    def __init__(self, data: bytes = b""):
        self._buf = bytearray(data)
        self._write_bits = 0  # bits pending in the partial last byte
        self._read_pos = 0

    @property
    def bit_length(self) -> int:
        return 8 * len(self._buf) - (8 - self._write_bits) % 8

    def write_bit(self, bit: int) -> None:
        if self._write_bits == 0:
            self._buf.append(0)
        if bit:
            self._buf[-1] |= 0x80 >> self._write_bits
        self._write_bits = (self._write_bits + 1) % 8

    def write_bits(self, value: int, count: int) -> None:
        for shift in range(count - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def write_bytes(self, data: bytes) -> None:
        if self._write_bits:
            raise CodecError("byte write on an unaligned bitstream")
        self._buf.extend(data)

    def read_bit(self) -> int:
        if self._read_pos >= self.bit_length:
            raise CodecError("bitstream exhausted")
        byte, offset = divmod(self._read_pos, 8)
        self._read_pos += 1
        return (self._buf[byte] >> (7 - offset)) & 1

    def read_bits(self, count: int) -> int:
        value = 0
        for _ in range(count):
            value = (value << 1) | self.read_bit()
        return value

    def to_bytes(self) -> bytes:
        return bytes(self._buf)


@dataclass(frozen=True)
class QuantizedPmf:
    """Counts summing to exactly 2**16 and their cumulative table."""

    counts: np.ndarray
    cum: np.ndarray

    def __post_init__(self):
        if self.counts.min() < 1:
            raise CodecError("every symbol needs a count of at least 1")
        if int(self.counts.sum()) != PROB_SCALE:
            raise CodecError(f"counts must sum to {PROB_SCALE}, got {int(self.counts.sum())}")

    @property
    def size(self) -> int:
        return len(self.counts)

    def ideal_bits(self, symbol: int) -> float:
        return float(-np.log2(self.counts[symbol] / PROB_SCALE))


def quantize_pmf(p) -> QuantizedPmf:
    """Floor to 16-bit counts, clamp to >= 1, fix the sum by largest remainder.

    Deterministic: equal input floats always give equal counts.  Entries must
    be positive; the sum may sit slightly above 1 when a probability floor
    was applied upstream.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or len(p) < 2:
        raise CodecError("pmf must be a 1-D array of at least two probabilities")
    if len(p) > MAX_ALPHABET:
        raise CodecError(f"alphabet too large: {len(p)} > {MAX_ALPHABET}")
    if p.min() <= 0.0:
        raise CodecError("pmf entries must be positive")
    total = float(p.sum())
    if not 0.999 <= total <= 1.001:
        raise CodecError(f"pmf must sum to ~1, got {total}")
    scaled = p * PROB_SCALE
    base = np.floor(scaled)
    counts = np.maximum(base, 1.0).astype(np.int64)
    remainder = scaled - base
    delta = PROB_SCALE - int(counts.sum())
    if delta > 0:
        # add to the largest remainders, lowest index first on ties
        order = np.lexsort((np.arange(len(p)), -remainder))
        np.add.at(counts, order[np.arange(delta) % len(p)], 1)
    elif delta < 0:
        # remove from the smallest remainders, lowest index first on ties,
        # never dropping a count below 1
        order = np.lexsort((np.arange(len(p)), remainder))
        need = -delta
        while need > 0:
            took = 0
            for idx in order:
                if counts[idx] > 1:
                    counts[idx] -= 1
                    took += 1
                    need -= 1
                    if need == 0:
                        break
            if took == 0:
                raise CodecError("cannot normalize pmf counts")
    cum = np.zeros(len(p) + 1, dtype=np.int64)
    np.cumsum(counts, out=cum[1:])
    return QuantizedPmf(counts, cum)


class ArithmeticEncoder:
    """Streaming exact-interval encoder; ``finish`` returns the coded bytes."""

    def __init__(self):
        self._out = bytearray()
        self._low = 0
        self._range = 1
        self._scale_bits = 0

    def encode(self, pmf: QuantizedPmf, symbol: int) -> None:
        if not 0 <= symbol < pmf.size:
            raise CodecError(f"symbol {symbol} outside alphabet of size {pmf.size}")
        clo = int(pmf.cum[symbol])
        chi = int(pmf.cum[symbol + 1])
        self._low = (self._low << PROB_BITS) + self._range * clo
        self._range *= chi - clo
        self._scale_bits += PROB_BITS
        self._emit_settled()

    def _emit_settled(self) -> None:
        low, rng, bits = self._low, self._range, self._scale_bits
        while bits >= 8:
            shift = bits - 8
            top = low >> shift
            if (low + rng - 1) >> shift != top:
                break
            self._out.append(top)
            low -= top << shift
            bits -= 8
        self._low, self._scale_bits = low, bits

    def finish(self) -> bytes:
        self._out.extend(_flush_bytes(self._low, self._range, self._scale_bits))
        self._low, self._range, self._scale_bits = 0, 1, 0
        return bytes(self._out)


def _flush_bytes(low: int, rng: int, scale_bits: int) -> bytes:
    """Shortest byte-aligned fraction inside [low, low + range), minus the
    already-emitted prefix."""
    keep = scale_bits - rng.bit_length() + 1  # a step this coarse must fit
    n_bytes = max(0, -(-keep // 8))
    if n_bytes == 0:
        return b""
    step = scale_bits - 8 * n_bytes
    point = ((low + (1 << step) - 1) >> step) << step  # lowest aligned point
    assert point < low + rng
    return bytes((point >> (scale_bits - 8 * i)) & 0xFF for i in range(1, n_bytes + 1))


def _flush_length(rng: int, scale_bits: int) -> int:
    keep = scale_bits - rng.bit_length() + 1
    return max(0, -(-keep // 8))


class ArithmeticDecoder:
    """Mirror of :class:`ArithmeticEncoder` over a complete coded stream."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # next unread byte
        self._low = 0
        self._range = 1
        self._scale_bits = 0
        self._code = 0
        self._consumed = 0  # bytes of the stream folded into _code so far

    def _next_code_byte(self) -> int:
        # bytes beyond the flush are an implicit run of zeros
        b = self._data[self._consumed] if self._consumed < len(self._data) else 0
        self._consumed += 1
        return b

    def decode(self, pmf: QuantizedPmf) -> int:
        self._code = (self._code << PROB_BITS) | (self._next_code_byte() << 8) | self._next_code_byte()
        base = self._low << PROB_BITS
        offset = self._code - base
        if offset < 0:
            raise CodecError("coded stream corrupt: value below the current interval")
        t = offset // self._range
        if t >= PROB_SCALE:
            raise CodecError("coded stream corrupt: value beyond the current interval")
        symbol = int(np.searchsorted(pmf.cum, t, side="right")) - 1
        clo = int(pmf.cum[symbol])
        chi = int(pmf.cum[symbol + 1])
        self._low = base + self._range * clo
        self._range *= chi - clo
        self._scale_bits += PROB_BITS
        self._drop_settled()
        return symbol

    def _drop_settled(self) -> None:
        low, rng, bits = self._low, self._range, self._scale_bits
        code = self._code
        while bits >= 8:
            shift = bits - 8
            top = low >> shift
            if (low + rng - 1) >> shift != top:
                break
            low -= top << shift
            code -= top << shift
            if code < 0:
                raise CodecError("coded stream corrupt: settled prefix mismatch")
            bits -= 8
        self._low, self._scale_bits, self._code = low, bits, code

    def expected_length(self) -> int:
        """Exact byte length the encoder would have produced to reach this state."""
        settled = self._consumed - (self._scale_bits + 7) // 8
        return settled + _flush_length(self._range, self._scale_bits)

    def check_complete(self) -> None:
        expected = self.expected_length()
        if len(self._data) < expected:
            raise CodecError(f"coded stream truncated: {len(self._data)} bytes, need {expected}")
        if len(self._data) > expected:
            raise CodecError(f"coded stream has {len(self._data) - expected} trailing bytes")


def ac_encode(symbols, pmfs) -> Bitstream:
    """Encode ``symbols[i]`` under ``pmfs[i]``; returns a byte-aligned bitstream."""
    pmfs = list(pmfs)
    symbols = list(symbols)
    if len(pmfs) != len(symbols):
        raise CodecError("need exactly one pmf per symbol")
    enc = ArithmeticEncoder()
    for sym, pmf in zip(symbols, pmfs):
        enc.encode(pmf, int(sym))
    return Bitstream(enc.finish())


def ac_decode(stream, pmf_supplier, count: int) -> list[int]:
    """Decode ``count`` symbols; ``pmf_supplier(decoded_so_far)`` yields each PMF.

    The supplier sees the symbols decoded so far, so adaptive models whose
    next PMF depends only on already-decoded symbols round-trip.  Raises
    :class:`CodecError` if the stream is truncated or carries extra bytes.
    """
    data = stream.to_bytes() if isinstance(stream, Bitstream) else bytes(stream)
    dec = ArithmeticDecoder(data)
    out: list[int] = []
    for _ in range(count):
        pmf = pmf_supplier(out)
        out.append(dec.decode(pmf))
    dec.check_complete()
    return out


@dataclass(frozen=True)
class RationalInterval:
    """Exact final interval [lower, lower + width) of textbook nesting."""

    lower: Fraction
    width: Fraction

    def __post_init__(self):
        if not (0 <= self.lower and self.lower + self.width <= 1 and self.width > 0):
            raise ValueError("interval must be a positive-width subinterval of [0, 1)")

    @property
    def upper(self) -> Fraction:
        return self.lower + self.width

    def contains(self, x) -> bool:
        return self.lower <= x < self.upper


def rational_encode(symbols, pmfs) -> RationalInterval:
    """Reference coder: nest exact rational subintervals, one per symbol.

    ``pmfs`` is either one PMF (a sequence of Fractions summing to 1) reused
    for every symbol, or a list with one PMF per symbol.
    """
    symbols = [int(s) for s in symbols]
    if pmfs and isinstance(pmfs[0], (Fraction, int)):
        pmfs = [pmfs] * len(symbols)
    if len(pmfs) != len(symbols):
        raise ValueError("need exactly one pmf per symbol")
    lower = Fraction(0)
    width = Fraction(1)
    for sym, pmf in zip(symbols, pmfs):
        pmf = [Fraction(x) for x in pmf]
        if sum(pmf) != 1:
            raise ValueError("rational pmf must sum to exactly 1")
        if not 0 <= sym < len(pmf):
            raise ValueError(f"symbol {sym} outside alphabet of size {len(pmf)}")
        if min(pmf) <= 0:
            raise ValueError("rational pmf entries must be positive")
        cum_low = sum(pmf[:sym], Fraction(0))
        lower += width * cum_low
        width *= pmf[sym]
    return RationalInterval(lower, width)


def stream_fraction(data: bytes) -> Fraction:
    """The coded byte string read as a binary fraction 0.b0 b1 b2 ..."""
    if not data:
        return Fraction(0)
    return Fraction(int.from_bytes(data, "big"), 1 << (8 * len(data)))
