"""Core tensor containers: bit-packed binary tensors and fixed-point integer tensors.

Binary activations and weights live in {-1, +1} logically but are stored one
bit per value, 32 channels per uint32 word, with bit 1 encoding +1 and bit 0
encoding -1.  Padding bits past the channel count are always zero so popcount
arithmetic can be corrected with per-pixel constants instead of per-word masks.

Fixed-point tensors store signed integers together with a Q-format: the real
value of element n is n * 2**(-qformat).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WORD_BITS = 32

_SHIFTS = np.arange(WORD_BITS, dtype=np.uint32)


def words_per_pixel(channels: int) -> int:
    """Number of 32-bit words needed for one pixel's channel vector."""
    return (channels + WORD_BITS - 1) // WORD_BITS


@dataclass(frozen=True)
class BinaryTensor:
    """Bit-packed {-1,+1} tensor, layout [height][width][words]."""

    height: int
    width: int
    channels: int
    words: np.ndarray  # uint32 [height][width][words_per_pixel(channels)]

    def __post_init__(self):
        expected = (self.height, self.width, words_per_pixel(self.channels))
        if self.words.shape != expected:
            raise ValueError(f"word array shape {self.words.shape}, expected {expected}")
        if self.words.dtype != np.uint32:
            raise ValueError(f"word array dtype {self.words.dtype}, expected uint32")
        self.words.flags.writeable = False

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    def nbytes(self) -> int:
        return self.words.size * 4


@dataclass(frozen=True)
class FixedTensor:
    """Signed-integer tensor with Q-format scale, layout [height][width][channels].

    Real value of an element is ``int * 2**(-qformat)``.  ``bitwidth`` is the
    nominal storage width (16 or 32); the array itself is int32 for uniformity
    but every element is checked to fit the nominal width.  ``saturated``
    carries the clip count from quantization (informational).
    """

    height: int
    width: int
    channels: int
    values: np.ndarray  # int32 [height][width][channels]
    qformat: int
    bitwidth: int = 16
    saturated: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.bitwidth not in (16, 32):
            raise ValueError(f"bitwidth must be 16 or 32, got {self.bitwidth}")
        expected = (self.height, self.width, self.channels)
        if self.values.shape != expected:
            raise ValueError(f"value array shape {self.values.shape}, expected {expected}")
        if self.values.dtype != np.int32:
            raise ValueError(f"value array dtype {self.values.dtype}, expected int32")
        lo, hi = signed_range(self.bitwidth)
        if self.values.size and (self.values.min() < lo or self.values.max() > hi):
            raise ValueError(f"values exceed signed {self.bitwidth}-bit range")
        self.values.flags.writeable = False

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    def to_real(self) -> np.ndarray:
        """Dequantize to float64."""
        return self.values.astype(np.float64) * 2.0 ** (-self.qformat)

    def nbytes(self) -> int:
        return self.values.size * (self.bitwidth // 8)


@dataclass(frozen=True)
class PackedBinaryWeights:
    """Bit-packed conv filters, layout [out][ky][kx][words], same encoding as BinaryTensor."""

    out_channels: int
    in_channels: int
    ky: int
    kx: int
    words: np.ndarray  # uint32 [out][ky][kx][words_per_pixel(in_channels)]

    def __post_init__(self):
        expected = (self.out_channels, self.ky, self.kx, words_per_pixel(self.in_channels))
        if self.words.shape != expected:
            raise ValueError(f"word array shape {self.words.shape}, expected {expected}")
        if self.words.dtype != np.uint32:
            raise ValueError(f"word array dtype {self.words.dtype}, expected uint32")
        self.words.flags.writeable = False

    def nbytes(self) -> int:
        return self.words.size * 4


def signed_range(bitwidth: int) -> tuple[int, int]:
    return -(1 << (bitwidth - 1)), (1 << (bitwidth - 1)) - 1


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a trailing channel axis of {0,1} values into uint32 words.

    bits: [..., C] integer array of 0/1.  Returns [..., ceil(C/32)] uint32 with
    channel 32*w+b in bit b of word w; padding bits are zero.
    """
    c = bits.shape[-1]
    nw = words_per_pixel(c)
    padded = np.zeros(bits.shape[:-1] + (nw * WORD_BITS,), dtype=np.uint32)
    padded[..., :c] = bits
    grouped = padded.reshape(bits.shape[:-1] + (nw, WORD_BITS))
    return np.bitwise_or.reduce(grouped << _SHIFTS, axis=-1)


def _unpack_bits(words: np.ndarray, channels: int) -> np.ndarray:
    """Inverse of _pack_bits: [..., nw] uint32 -> [..., channels] of {0,1} uint8."""
    bits = (words[..., None] >> _SHIFTS) & np.uint32(1)
    flat = bits.reshape(words.shape[:-1] + (words.shape[-1] * WORD_BITS,))
    return flat[..., :channels].astype(np.uint8)


def pack(dense: np.ndarray) -> BinaryTensor:
    """Pack a dense [H][W][C] tensor of -1/+1 integers into a BinaryTensor.

    Rejects any element outside {-1, +1}, reporting the first offending index.
    """
    dense = np.asarray(dense)
    if dense.ndim != 3:
        raise ValueError(f"expected a [H][W][C] tensor, got ndim={dense.ndim}")
    bad = (dense != 1) & (dense != -1)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"element {dense[idx]} at {idx} is not -1 or +1")
    h, w, c = dense.shape
    bits = ((dense.astype(np.int64) + 1) // 2).astype(np.uint32)
    return BinaryTensor(h, w, c, _pack_bits(bits))


def unpack(t: BinaryTensor) -> np.ndarray:
    """Unpack a BinaryTensor to a dense [H][W][C] int8 tensor of -1/+1."""
    bits = _unpack_bits(t.words, t.channels)
    return (bits.astype(np.int8) * 2 - 1)


def pack_weights(dense: np.ndarray) -> PackedBinaryWeights:
    """Pack dense [out][ky][kx][in] filters of -1/+1 into PackedBinaryWeights."""
    dense = np.asarray(dense)
    if dense.ndim != 4:
        raise ValueError(f"expected [out][ky][kx][in] filters, got ndim={dense.ndim}")
    bad = (dense != 1) & (dense != -1)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"element {dense[idx]} at {idx} is not -1 or +1")
    o, ky, kx, c = dense.shape
    bits = ((dense.astype(np.int64) + 1) // 2).astype(np.uint32)
    return PackedBinaryWeights(o, c, ky, kx, _pack_bits(bits))


def unpack_weights(w: PackedBinaryWeights) -> np.ndarray:
    """Unpack filters to a dense [out][ky][kx][in] int8 tensor of -1/+1."""
    bits = _unpack_bits(w.words, w.in_channels)
    return (bits.astype(np.int8) * 2 - 1)


def quantize_values(values, qformat: int, bitwidth: int = 16) -> tuple[np.ndarray, int]:
    """Quantize reals to integers at 2**(-qformat) resolution.

    Round to nearest, ties away from zero, saturating silently to the signed
    range of ``bitwidth``.  Returns (int32 array, saturation count).
    """
    if qformat < 0:
        raise ValueError(f"qformat must be >= 0, got {qformat}")
    if bitwidth not in (16, 32):
        raise ValueError(f"bitwidth must be 16 or 32, got {bitwidth}")
    x = np.asarray(values, dtype=np.float64) * (2.0 ** qformat)
    q = np.trunc(x + np.copysign(0.5, x))
    lo, hi = signed_range(bitwidth)
    saturated = int(np.count_nonzero((q < lo) | (q > hi)))
    q = np.clip(q, lo, hi)
    return q.astype(np.int32), saturated


def quantize_real(values, qformat: int, bitwidth: int = 16) -> FixedTensor:
    """Quantize a real [H][W][C] (or [H][W]) tensor into a FixedTensor."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"expected a 2-D or 3-D tensor, got ndim={arr.ndim}")
    q, saturated = quantize_values(arr, qformat, bitwidth)
    h, w, c = q.shape
    return FixedTensor(h, w, c, q, qformat, bitwidth, saturated=saturated)
