"""Lossless packing of ternary digits into fixed-width binary codes.

Two schemes, both operating on trits d in {-1, 0, +1} shifted to unsigned
digits d' = d + 1 in {0, 1, 2}:

* base-4 ("2-bit"): each digit occupies two bits of a byte, so a byte holds
  a group of four trits::

      byte = sum(d'[j] << (2 * j) for j in range(4))

  Decoding is a shift and mask.  Costs 2.0 bits per trit.

* base-3 block codes ("1.6-bit"): a group of k digits is read as a base-3
  integer N (big-endian, first digit most significant) and scaled into a
  p-bit code::

      code = floor((N * 2**p + (3**k - 1)) / 3**k)

  The canonical decoder inverts the scaling with one multiply and one
  floored division::

      x = floor((code * 3**k - (3**k - 1) + (2**p - 1)) / 2**p)

  and reads digits back out of x by division/modulo.  The round-trip is
  exact for every group if and only if 2**p > 3**k.  The shipped block
  size is k=5, p=8: 2**8 = 256 > 243 = 3**5, five trits per byte, i.e.
  1.6 bits per trit against the log2(3) ~ 1.585 entropy floor.

For k=5, p=8 there is also a division-free decoder (`decode_trit_block_mul`)
that peels digits most-significant-first from a byte-sized fixed-point
state: each step multiplies by 3 and splits the 10-bit product into a
high-byte digit and a low-byte remainder state.  It is exhaustively
verified against the canonical decoder elsewhere.

Incomplete final groups are padded with trit 0 (digit 1); decoders take the
true trit count and drop pad positions.

These are the scalar reference implementations.  The array fast paths used
by block quantization live in the kernel backends and are tested against
the functions here.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

# 3**40 < 2**64 <= 3**41, so k above 40 could never satisfy the capacity
# condition with a p we accept (p <= 64); reject early with a clear error.
MAX_GROUP_TRITS = 40
MAX_CODE_BITS = 64

PAD_TRIT = 0

BASE4_GROUP = 4


class CapacityError(ValueError):
    """The code width cannot losslessly hold a full trit group (2**p <= 3**k)."""


class DecodeUnderrunError(ValueError):
    """Fewer packed words were supplied than the requested trit count needs."""


@dataclass(frozen=True)
class CodecParams:
    """Base-3 block-code geometry: k trits per group, p bits per code.

    ``lossless=False`` skips the 2**p > 3**k capacity check, which is only
    useful for studying collision behaviour of deliberately narrow codes;
    every shipping format uses a lossless geometry.
    """

    k: int
    p: int
    lossless: bool = True

    def __post_init__(self) -> None:
        if not 1 <= self.k <= MAX_GROUP_TRITS:
            raise ValueError(f"trit group size must be in [1, {MAX_GROUP_TRITS}], got {self.k}")
        if not 1 <= self.p <= MAX_CODE_BITS:
            raise ValueError(f"code width must be in [1, {MAX_CODE_BITS}] bits, got {self.p}")
        if self.lossless and not self.has_capacity():
            raise CapacityError(
                f"2**{self.p} = {2 ** self.p} <= 3**{self.k} = {3 ** self.k}: "
                f"{self.p}-bit codes cannot hold {self.k}-trit groups losslessly"
            )

    def has_capacity(self) -> bool:
        return 2 ** self.p > 3 ** self.k

    @property
    def group_values(self) -> int:
        """Number of distinct trit groups, 3**k."""
        return 3 ** self.k

    @property
    def code_values(self) -> int:
        """Number of representable codes, 2**p."""
        return 2 ** self.p


#: The shipped 1.6-bit geometry: five trits per byte.
K5P8 = CodecParams(k=5, p=8)


@dataclass(frozen=True)
class PackedCode:
    """One base-3 block code plus the number of real (non-pad) trits in it."""

    code: int
    trit_count: int

    def __post_init__(self) -> None:
        if self.code < 0:
            raise ValueError(f"code must be non-negative, got {self.code}")
        if self.trit_count < 1:
            raise ValueError(f"trit_count must be positive, got {self.trit_count}")


def bits_per_trit(params: CodecParams) -> Fraction:
    """Exact storage cost of the block code, p/k bits per trit."""
    return Fraction(params.p, params.k)


def _check_trits(trits: Sequence[int]) -> None:
    for t in trits:
        if t not in (-1, 0, 1):
            raise ValueError(f"trit values must be -1, 0, or +1, got {t!r}")


def pack_base4(trits: Sequence[int], k: int = BASE4_GROUP) -> bytes:
    """Pack trits into bytes, k trits per byte at two bits each (k in 1..4).

    An incomplete final group is padded with trit 0; the pad digits land in
    the high bits of the last byte.
    """
    if not 1 <= k <= BASE4_GROUP:
        raise ValueError(f"base-4 group size must be in [1, {BASE4_GROUP}], got {k}")
    _check_trits(trits)
    out = bytearray()
    for start in range(0, len(trits), k):
        group = list(trits[start : start + k])
        group += [PAD_TRIT] * (k - len(group))
        word = 0
        for j, t in enumerate(group):
            word |= (t + 1) << (2 * j)
        out.append(word)
    return bytes(out)


def unpack_base4(words: Iterable[int], n: int, k: int = BASE4_GROUP) -> list[int]:
    """Recover the first n trits from base-4 packed words (pad digits dropped)."""
    if not 1 <= k <= BASE4_GROUP:
        raise ValueError(f"base-4 group size must be in [1, {BASE4_GROUP}], got {k}")
    if n < 0:
        raise ValueError(f"trit count must be non-negative, got {n}")
    words = bytes(words)
    needed = (n + k - 1) // k
    if needed > len(words):
        raise DecodeUnderrunError(
            f"{n} trits at {k} per word need {needed} words, got {len(words)}"
        )
    trits: list[int] = []
    for i in range(needed):
        word = words[i]
        take = min(k, n - i * k)
        for j in range(take):
            digit = (word >> (2 * j)) & 0x03
            if digit == 3:
                raise ValueError(
                    f"invalid base-4 digit 3 in word {i} (codes use digits 0..2 only)"
                )
            trits.append(digit - 1)
    return trits


def encode_trit_block(trits: Sequence[int], params: CodecParams = K5P8) -> PackedCode:
    """Encode up to k trits into one p-bit code (short groups are padded).

    The raw scaled value is masked to p bits because a PackedCode is by
    definition a p-bit word.  With a lossless geometry the mask never fires;
    with ``lossless=False`` it folds the one overflowing value back into
    range, exactly as storing into a p-bit field would.
    """
    if not trits:
        raise ValueError("cannot encode an empty trit group")
    if len(trits) > params.k:
        raise ValueError(f"got {len(trits)} trits for a {params.k}-trit group")
    _check_trits(trits)
    n = 0
    padded = list(trits) + [PAD_TRIT] * (params.k - len(trits))
    for t in padded:
        n = n * 3 + (t + 1)
    three_k = params.group_values
    code = (n * params.code_values + (three_k - 1)) // three_k
    code &= params.code_values - 1
    return PackedCode(code=code, trit_count=len(trits))


def decode_trit_block_canonical(
    code: PackedCode | int, params: CodecParams = K5P8, trit_count: int | None = None
) -> list[int]:
    """Invert the base-3 block code by multiply + floored division.

    Accepts either a PackedCode (which carries its own trit count) or a bare
    integer code with an explicit ``trit_count``.
    """
    if isinstance(code, PackedCode):
        value, count = code.code, code.trit_count
    else:
        value = int(code)
        count = params.k if trit_count is None else trit_count
    if not 0 <= value < params.code_values:
        raise ValueError(f"code {value} out of range for {params.p}-bit words")
    if not 1 <= count <= params.k:
        raise ValueError(f"trit_count must be in [1, {params.k}], got {count}")
    three_k = params.group_values
    x = (value * three_k - (three_k - 1) + (params.code_values - 1)) // params.code_values
    trits = []
    for j in range(count):
        trits.append((x // 3 ** (params.k - 1 - j)) % 3 - 1)
    return trits


def decode_trit_block_mul(code: PackedCode | int, trit_count: int | None = None) -> list[int]:
    """Division-free decoder for the k=5, p=8 geometry.

    Treats the byte as a fixed-point fraction of 3**5 and peels one digit
    per step: multiply the 8-bit state by 3, the high byte of the 10-bit
    product is the next digit (most significant first) and the low byte is
    the next state.  Bitwise-equal to the canonical decoder on every code
    that the k=5, p=8 encoder can produce.
    """
    if isinstance(code, PackedCode):
        value, count = code.code, code.trit_count
    else:
        value = int(code)
        count = K5P8.k if trit_count is None else trit_count
    if not 0 <= value <= 0xFF:
        raise ValueError(f"code {value} out of range for 8-bit words")
    if not 1 <= count <= K5P8.k:
        raise ValueError(f"trit_count must be in [1, {K5P8.k}], got {count}")
    trits = []
    state = value
    for _ in range(count):
        prod = state * 3
        trits.append((prod >> 8) - 1)
        state = prod & 0xFF
    return trits


def pack_trit_stream(trits: Sequence[int], params: CodecParams = K5P8) -> bytes:
    """Pack an arbitrary-length trit sequence into whole base-3 block codes.

    Only byte-wide codes (p=8) can be framed into a byte stream.
    """
    if params.p != 8:
        raise ValueError(f"only p=8 codes can be framed into bytes, got p={params.p}")
    out = bytearray()
    for start in range(0, len(trits), params.k):
        out.append(encode_trit_block(trits[start : start + params.k], params).code)
    return bytes(out)


def unpack_trit_stream(words: Iterable[int], n: int, params: CodecParams = K5P8) -> list[int]:
    """Recover the first n trits from a base-3 packed byte stream."""
    if params.p != 8:
        raise ValueError(f"only p=8 codes can be framed into bytes, got p={params.p}")
    if n < 0:
        raise ValueError(f"trit count must be non-negative, got {n}")
    words = bytes(words)
    needed = (n + params.k - 1) // params.k
    if needed > len(words):
        raise DecodeUnderrunError(
            f"{n} trits at {params.k} per word need {needed} words, got {len(words)}"
        )
    trits: list[int] = []
    for i in range(needed):
        take = min(params.k, n - i * params.k)
        trits.extend(decode_trit_block_canonical(words[i], params, trit_count=take))
    return trits
