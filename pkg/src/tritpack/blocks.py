"""Blockwise ternary quantization with per-block binary16 scales.

A tensor is split into contiguous blocks of 256 elements.  Each block
stores the absolute maximum of its values as a binary16 scale and every
element as a trit: digit = round_half_away(value / absmax) + 1.  Two
payload encodings:

* TQ2: base-4, four trits per byte -> 64 payload bytes + 2 scale bytes
  = 66 bytes per block (2.0625 bits per weight).
* TQ1: base-3 block codes, five trits per byte -> 52 payload bytes
  (51 codes of five real trits, then one tail code carrying element 255
  plus four pad trits) + 2 scale bytes = 54 bytes per block (1.6875 bits
  per weight).

Digit decisions are made against the float32 absmax (its exact float32
reciprocal, and 0 when the absmax is 0); the scale is then rounded to
binary16 for storage and dequantization uses that stored value, so the
roundtrip error bound per element is scale_f16/2 + |scale - scale_f16|.

`ternarize` is the training-style whole-matrix variant: one shared scale
gamma = epsilon + mean(|W|), trits = round(clamp(W/gamma, -1, 1)).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np

from tritpack import backend as _backend

BLOCK_ELEMENTS = 256

_SCALE_BYTES = 2
_SCALE_DTYPE = np.dtype("<f2")
_TQ1_PAD_DIGITS = 4  # the tail code holds 1 real trit + 4 pads


class QuantizationError(ValueError):
    """Input cannot be quantized (non-finite values, bad shape, ...)."""


class DType(IntEnum):
    """Element formats; values are the container dtype tags."""

    F32 = 0
    F16 = 1
    TQ2 = 2
    TQ1 = 3

    @classmethod
    def parse(cls, name: str) -> "DType":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown dtype {name!r}, expected one of "
                             f"{', '.join(d.name.lower() for d in cls)}") from None

    @property
    def is_quantized(self) -> bool:
        return self in (DType.TQ2, DType.TQ1)

    @property
    def payload_bytes(self) -> int:
        """Packed trit bytes per 256-element block (quantized formats only)."""
        if self is DType.TQ2:
            return 64
        if self is DType.TQ1:
            return 52
        raise ValueError(f"{self.name} is not a block-quantized format")

    @property
    def block_bytes(self) -> int:
        """Serialized bytes per 256-element block (payload + scale)."""
        return self.payload_bytes + _SCALE_BYTES

    @property
    def bits_per_weight(self) -> Fraction:
        """Exact storage cost per element."""
        if self is DType.F32:
            return Fraction(32)
        if self is DType.F16:
            return Fraction(16)
        return Fraction(self.block_bytes * 8, BLOCK_ELEMENTS)


@dataclass(frozen=True)
class TQ2Block:
    """One 256-element block: 64 base-4 payload bytes + binary16 scale."""

    payload: bytes
    scale: np.float16

    def __post_init__(self) -> None:
        if len(self.payload) != DType.TQ2.payload_bytes:
            raise ValueError(f"TQ2 payload must be 64 bytes, got {len(self.payload)}")

    def to_bytes(self) -> bytes:
        return self.payload + np.float16(self.scale).astype(_SCALE_DTYPE).tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "TQ2Block":
        if len(raw) != DType.TQ2.block_bytes:
            raise ValueError(f"TQ2 block must be 66 bytes, got {len(raw)}")
        scale = np.frombuffer(raw[-_SCALE_BYTES:], dtype=_SCALE_DTYPE)[0]
        return cls(payload=raw[:-_SCALE_BYTES], scale=np.float16(scale))


@dataclass(frozen=True)
class TQ1Block:
    """One 256-element block: 52 base-3 payload bytes + binary16 scale."""

    payload: bytes
    scale: np.float16

    def __post_init__(self) -> None:
        if len(self.payload) != DType.TQ1.payload_bytes:
            raise ValueError(f"TQ1 payload must be 52 bytes, got {len(self.payload)}")

    def to_bytes(self) -> bytes:
        return self.payload + np.float16(self.scale).astype(_SCALE_DTYPE).tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "TQ1Block":
        if len(raw) != DType.TQ1.block_bytes:
            raise ValueError(f"TQ1 block must be 54 bytes, got {len(raw)}")
        scale = np.frombuffer(raw[-_SCALE_BYTES:], dtype=_SCALE_DTYPE)[0]
        return cls(payload=raw[:-_SCALE_BYTES], scale=np.float16(scale))


def _as_block_values(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float32)
    if v.shape != (BLOCK_ELEMENTS,):
        raise QuantizationError(f"a block holds exactly {BLOCK_ELEMENTS} values, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise QuantizationError("block contains non-finite values")
    return v


def quantize_rows(values: np.ndarray, fmt: DType, backend: str | None = None
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Quantize float32 blocks (nb, 256) to (payload uint8 (nb, pb), scales float16 (nb,)).

    Array form shared by the single-block functions, the matrix packer,
    and the container writer.
    """
    kern = _backend.resolve(backend)
    digits, scales = kern.quantize_blocks(np.ascontiguousarray(values, dtype=np.float32))
    nb = digits.shape[0]
    if fmt is DType.TQ2:
        payload = kern.pack_base4(digits.reshape(-1)).reshape(nb, 64)
    elif fmt is DType.TQ1:
        padded = np.concatenate(
            [digits, np.ones((nb, _TQ1_PAD_DIGITS), dtype=np.uint8)], axis=1
        )
        payload = kern.encode_base3(np.ascontiguousarray(padded).reshape(-1)).reshape(nb, 52)
    else:
        raise ValueError(f"{fmt.name} is not a block-quantized format")
    return payload, scales.astype(_SCALE_DTYPE)


def dequantize_rows(payload: np.ndarray, scales: np.ndarray, fmt: DType,
                    backend: str | None = None) -> np.ndarray:
    """Reconstruct float32 blocks (nb, 256) from packed payload and binary16 scales."""
    kern = _backend.resolve(backend)
    payload = np.ascontiguousarray(payload, dtype=np.uint8)
    nb = payload.shape[0]
    if fmt is DType.TQ2:
        digits = kern.unpack_base4(payload.reshape(-1)).reshape(nb, BLOCK_ELEMENTS)
    elif fmt is DType.TQ1:
        digits = kern.decode_base3(payload.reshape(-1)).reshape(nb, -1)
        digits = np.ascontiguousarray(digits[:, :BLOCK_ELEMENTS])
    else:
        raise ValueError(f"{fmt.name} is not a block-quantized format")
    return kern.dequantize_blocks(digits, scales.astype(np.float32))


def quantize_block_tq2(values, backend: str | None = None) -> TQ2Block:
    """Quantize exactly 256 finite values into a TQ2 block."""
    v = _as_block_values(values)
    payload, scales = quantize_rows(v.reshape(1, -1), DType.TQ2, backend=backend)
    return TQ2Block(payload=payload.tobytes(), scale=np.float16(scales[0]))


def dequantize_block_tq2(block: TQ2Block, backend: str | None = None) -> np.ndarray:
    """Reconstruct the 256 float32 values scale * (digit - 1)."""
    payload = np.frombuffer(block.payload, dtype=np.uint8).reshape(1, -1)
    scales = np.asarray([block.scale], dtype=_SCALE_DTYPE)
    return dequantize_rows(payload, scales, DType.TQ2, backend=backend)[0]


def quantize_block_tq1(values, backend: str | None = None) -> TQ1Block:
    """Quantize exactly 256 finite values into a TQ1 block."""
    v = _as_block_values(values)
    payload, scales = quantize_rows(v.reshape(1, -1), DType.TQ1, backend=backend)
    return TQ1Block(payload=payload.tobytes(), scale=np.float16(scales[0]))


def dequantize_block_tq1(block: TQ1Block, backend: str | None = None) -> np.ndarray:
    """Reconstruct the 256 float32 values scale * (digit - 1)."""
    payload = np.frombuffer(block.payload, dtype=np.uint8).reshape(1, -1)
    scales = np.asarray([block.scale], dtype=_SCALE_DTYPE)
    return dequantize_rows(payload, scales, DType.TQ1, backend=backend)[0]


@dataclass(frozen=True)
class TernarizeResult:
    """Shared-scale ternarization: gamma and the trit matrix (int8, W's shape)."""

    gamma: float
    trits: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """The ternary approximation gamma * trits; entries in {-gamma, 0, gamma} exactly."""
        return self.gamma * self.trits.astype(np.float64)


def ternarize(W, epsilon: float = 1e-5) -> TernarizeResult:
    """Ternarize a whole matrix with one shared scale.

    gamma = epsilon + mean(|W|); trits = round(clamp(W/gamma, -1, 1)),
    half away from zero.  epsilon keeps gamma positive for all-zero input.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.size == 0:
        raise QuantizationError(f"expected a non-empty 2-D matrix, got shape {W.shape}")
    if not np.isfinite(W).all():
        raise QuantizationError("matrix contains non-finite values")
    gamma = epsilon + float(np.mean(np.abs(W)))
    q = np.clip(W / gamma, -1.0, 1.0)
    trits = (q >= 0.5).astype(np.int8) - (q <= -0.5).astype(np.int8)
    return TernarizeResult(gamma=gamma, trits=trits)
