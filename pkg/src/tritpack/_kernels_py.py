"""Pure-numpy kernel backend.

This module and the compiled extension (`_kernels`) implement the same
surface and promise bitwise-identical outputs, so either can serve any
call.  That promise only holds because the arithmetic is pinned precisely;
when touching either backend, keep these rules in sync:

* Digits are unsigned trit values d' = d + 1 in {0, 1, 2}.

* Quantization: per 256-element block, scale = max(|x|) in float32;
  inv = float32(1) / scale (or 0 when the scale is 0); v = x * inv in
  float32; digit = 1 + (v >= 0.5) - (v <= -0.5).  The comparisons are
  exact round-half-away-from-zero for |v| < 1.5, which always holds
  since |v| <= 1, and they dodge the float32 round-trick pitfalls at
  ties.  No float64 anywhere.

* Dequantization: x_hat = float32(scale) * (digit - 1).

* Matmul: activation terms are built per block as t[i] = x[i], -x[i], or
  +0.0 by digit; the block's inner sum is a fixed 256-leaf pairwise
  addition tree (seven halving levels then the final add), all float32.
  Per row, block partials scale * s are added into a float32 accumulator
  that starts at +0.0, blocks in ascending order.  Identical operations
  in identical order give identical bits, signed zeros included, so the
  compiled loops must not be "improved" with FMA, reassociation, or wider
  intermediates.

The matmul entry points take a [row0, row1) range so callers can shard
rows across threads; results are independent of the sharding.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

_BLOCK = 256
_TQ1_PAYLOAD = 52

_ROW_TILE = 32  # rows decoded together in the matmul loops

_SHIFTS = np.arange(4, dtype=np.uint8) * 2  # base-4 bit offsets within a byte


def pack_base4(digits: np.ndarray) -> np.ndarray:
    """Pack digit groups of four into bytes; digits.size must be a multiple of 4."""
    groups = digits.reshape(-1, 4)
    return np.bitwise_or.reduce(groups << _SHIFTS, axis=1).astype(np.uint8)


def unpack_base4(words: np.ndarray) -> np.ndarray:
    """Unpack bytes into base-4 digits, four per byte."""
    return ((words[:, None] >> _SHIFTS) & 0x03).reshape(-1)


def encode_base3(digits: np.ndarray) -> np.ndarray:
    """Encode digit groups of five into byte codes; digits.size must be a multiple of 5."""
    groups = digits.reshape(-1, 5).astype(np.uint32)
    n = groups[:, 0]
    for j in range(1, 5):
        n = n * 3 + groups[:, j]
    return ((n * 256 + 242) // 243).astype(np.uint8)


def decode_base3(codes: np.ndarray) -> np.ndarray:
    """Decode byte codes into digit groups of five, most significant first.

    Uses the fixed-point extraction: state *= 3; digit = state >> 8;
    state &= 0xFF.
    """
    state = codes.astype(np.uint16)
    out = np.empty((state.size, 5), dtype=np.uint8)
    for j in range(5):
        prod = state * 3
        out[:, j] = (prod >> 8).astype(np.uint8)
        state = prod & 0xFF
    return out.reshape(-1)


def quantize_blocks(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Quantize float32 blocks of 256 to digits and absmax scales.

    values: float32 (nb, 256).  Returns (digits uint8 (nb, 256),
    scales float32 (nb,)).
    """
    scales = np.max(np.abs(values), axis=1)
    with np.errstate(divide="ignore"):  # zero scales are masked out below
        inv = np.where(scales > 0, np.float32(1.0) / scales, np.float32(0.0))
    v = values * inv[:, None]
    digits = (
        np.uint8(1)
        + (v >= np.float32(0.5)).astype(np.uint8)
        - (v <= np.float32(-0.5)).astype(np.uint8)
    )
    return digits, scales


def dequantize_blocks(digits: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Reconstruct float32 values: scale * (digit - 1) per block."""
    signs = digits.astype(np.float32) - np.float32(1.0)
    return signs * scales[:, None]


def _tree_sum(terms: np.ndarray) -> np.ndarray:
    # Fixed pairwise tree over the last axis (length 256): eight halvings.
    t = terms
    while t.shape[-1] > 1:
        t = t[..., 0::2] + t[..., 1::2]
    return t[..., 0]


def _gemm_digits(digits: np.ndarray, scales: np.ndarray, x: np.ndarray, out: np.ndarray) -> None:
    # digits: uint8 (nrows, nb, 256); scales float32 (nrows, nb);
    # x float32 (batch, nb*256); out float32 (batch, nrows).
    nrows, nb = scales.shape
    batch = x.shape[0]
    xb = x.reshape(batch, nb, _BLOCK)
    for tile0 in range(0, nrows, _ROW_TILE):
        tile1 = min(tile0 + _ROW_TILE, nrows)
        d = digits[tile0:tile1]
        plus = d == 2
        minus = d == 0
        s_tile = scales[tile0:tile1]
        for j in range(batch):
            xj = xb[j]
            terms = np.where(plus, xj, np.where(minus, -xj, np.float32(0.0)))
            partial = s_tile * _tree_sum(terms)
            acc = np.zeros(tile1 - tile0, dtype=np.float32)
            for b in range(nb):
                acc = acc + partial[:, b]
            out[j, tile0:tile1] = acc


def gemm_tq2(
    payload: np.ndarray,
    scales: np.ndarray,
    x: np.ndarray,
    out: np.ndarray,
    row0: int,
    row1: int,
) -> None:
    """Multiply TQ2 rows [row0, row1) by activation batch x into out.

    payload: uint8 (rows, nb, 64); scales: float32 (rows, nb);
    x: float32 (batch, nb*256); out: float32 (batch, rows).
    """
    nb = payload.shape[1]
    digits = unpack_base4(payload[row0:row1].reshape(-1)).reshape(row1 - row0, nb, _BLOCK)
    _gemm_digits(digits, scales[row0:row1], x, out[:, row0:row1])


def gemm_tq1(
    payload: np.ndarray,
    scales: np.ndarray,
    x: np.ndarray,
    out: np.ndarray,
    row0: int,
    row1: int,
) -> None:
    """Multiply TQ1 rows [row0, row1) by activation batch x into out.

    payload: uint8 (rows, nb, 52); layout per block: 51 codes of five
    trits then one tail code whose first trit is element 255 (the other
    four are padding).  Other arguments as in gemm_tq2.
    """
    nb = payload.shape[1]
    decoded = decode_base3(payload[row0:row1].reshape(-1))
    decoded = decoded.reshape(row1 - row0, nb, _TQ1_PAYLOAD * 5)
    digits = decoded[:, :, :_BLOCK]
    _gemm_digits(digits, scales[row0:row1], x, out[:, row0:row1])
