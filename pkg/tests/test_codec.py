"""Tests for the scalar trit codecs (base-4 bytes and base-3 block codes)."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from tritpack.codec import (
    K5P8,
    MAX_GROUP_TRITS,
    CapacityError,
    CodecParams,
    DecodeUnderrunError,
    PackedCode,
    bits_per_trit,
    decode_trit_block_canonical,
    decode_trit_block_mul,
    encode_trit_block,
    pack_base4,
    pack_trit_stream,
    unpack_base4,
    unpack_trit_stream,
)

ALL_TRITS = (-1, 0, 1)


# ---------------------------------------------------------------------------
# base-4 byte packing
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "trits,expected",
    [
        ([-1, 0, 1, 1], bytes([164])),
        ([0, 0, 0, 0], bytes([85])),
        ([1, 1, 1, 1], bytes([170])),
        ([-1, -1, -1, -1], bytes([0])),
        ([], b""),
    ],
)
def test_pack_base4_examples(trits, expected):
    assert pack_base4(trits) == expected


def test_pack_base4_padding_uses_zero_trit():
    # One real trit (+1 -> digit 2) plus three pad digits of 1 each.
    assert pack_base4([1]) == bytes([2 + 4 + 16 + 64])
    assert unpack_base4(pack_base4([1]), 1) == [1]


def test_pack_base4_multibyte():
    trits = [-1, 0, 1, 1, 1, 0, -1]
    packed = pack_base4(trits)
    assert len(packed) == 2
    assert unpack_base4(packed, len(trits)) == trits


@pytest.mark.parametrize("n", range(0, 11))
def test_base4_roundtrip_exhaustive(n):
    # Every trit sequence up to length 10 survives a pack/unpack roundtrip.
    for trits in itertools.product(ALL_TRITS, repeat=n):
        seq = list(trits)
        assert unpack_base4(pack_base4(seq), n) == seq


def test_base4_roundtrip_randomized_large():
    rng = np.random.default_rng(1234)
    for n in (1, 5, 997, 10**6):
        seq = (rng.integers(0, 3, size=n) - 1).tolist()
        assert unpack_base4(pack_base4(seq), n) == seq


@pytest.mark.parametrize("k", [1, 2, 3])
def test_base4_narrow_group_sizes(k):
    trits = [1, -1, 0, 1, 1, -1, -1]
    packed = pack_base4(trits, k=k)
    assert len(packed) == -(-len(trits) // k)
    assert unpack_base4(packed, len(trits), k=k) == trits


def test_base4_rejects_bad_inputs():
    with pytest.raises(ValueError):
        pack_base4([2])
    with pytest.raises(ValueError):
        pack_base4([0], k=0)
    with pytest.raises(ValueError):
        pack_base4([0], k=5)
    with pytest.raises(ValueError):
        unpack_base4(b"\x55", -1)
    with pytest.raises(ValueError):
        unpack_base4(b"\x55", 1, k=9)


def test_unpack_base4_underrun():
    with pytest.raises(DecodeUnderrunError):
        unpack_base4(b"\x55", 5)
    with pytest.raises(DecodeUnderrunError):
        unpack_base4(b"", 1)


def test_unpack_base4_rejects_invalid_digit():
    # Digit 3 never appears in valid packed data.
    with pytest.raises(ValueError):
        unpack_base4(bytes([0b11]), 1)


# ---------------------------------------------------------------------------
# codec parameters
# ---------------------------------------------------------------------------


def test_codec_params_k5p8():
    assert K5P8.k == 5
    assert K5P8.p == 8
    assert K5P8.group_values == 243
    assert K5P8.code_values == 256
    assert K5P8.has_capacity()


@pytest.mark.parametrize("k,p", [(1, 2), (3, 5), (5, 8), (10, 16), (20, 32), (40, 64)])
def test_codec_params_capacity_ok(k, p):
    params = CodecParams(k, p)
    assert params.has_capacity()
    assert 2**p > 3**k


def test_codec_params_capacity_error():
    with pytest.raises(CapacityError):
        CodecParams(5, 7)
    with pytest.raises(CapacityError):
        CodecParams(2, 3)
    # Lossy construction is allowed when asked for explicitly.
    lossy = CodecParams(5, 7, lossless=False)
    assert not lossy.has_capacity()


def test_codec_params_range_validation():
    with pytest.raises(ValueError):
        CodecParams(0, 8)
    with pytest.raises(ValueError):
        CodecParams(MAX_GROUP_TRITS + 1, 64)
    with pytest.raises(ValueError):
        CodecParams(5, 0)
    with pytest.raises(ValueError):
        CodecParams(5, 65)


def test_bits_per_trit_is_exact_rational():
    assert bits_per_trit(K5P8) == Fraction(8, 5)
    assert bits_per_trit(CodecParams(1, 2)) == Fraction(2, 1)
    assert bits_per_trit(CodecParams(8, 13)) == Fraction(13, 8)
    # Any lossless parameterization must spend more than log2(3) bits/trit.
    assert float(bits_per_trit(K5P8)) > 1.584962500721156


# ---------------------------------------------------------------------------
# base-3 block codes
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "trits,code",
    [
        ([0, 0, 0, 0, 0], 128),
        ([-1, -1, -1, -1, -1], 0),
        ([1, 1, 1, 1, 1], 255),
        ([1], 213),  # one real trit, four zero pads
    ],
)
def test_encode_block_examples(trits, code):
    packed = encode_trit_block(trits, K5P8)
    assert packed.code == code
    assert packed.trit_count == len(trits)


def test_encode_block_pads_like_explicit_zeros():
    assert encode_trit_block([1], K5P8).code == encode_trit_block([1, 0, 0, 0, 0], K5P8).code
    assert encode_trit_block([-1, 1], K5P8).code == encode_trit_block([-1, 1, 0, 0, 0], K5P8).code


@pytest.mark.parametrize("code,trits", [(128, [0, 0, 0, 0, 0]), (0, [-1] * 5), (255, [1] * 5)])
def test_decode_block_examples(code, trits):
    assert decode_trit_block_canonical(code, K5P8) == trits
    assert decode_trit_block_mul(code) == trits


def test_decode_respects_trit_count():
    packed = encode_trit_block([1], K5P8)
    assert decode_trit_block_canonical(packed) == [1]
    assert decode_trit_block_canonical(packed.code, K5P8, trit_count=2) == [1, 0]
    assert decode_trit_block_mul(packed.code, trit_count=1) == [1]


def test_exhaustive_roundtrip_and_injectivity_k5p8():
    # All 3^5 = 243 blocks roundtrip through both decoders and the code
    # assignment is injective (lossless).
    seen = {}
    for trits in itertools.product(ALL_TRITS, repeat=5):
        seq = list(trits)
        packed = encode_trit_block(seq, K5P8)
        assert 0 <= packed.code < 256
        assert packed.code not in seen, f"collision with {seen.get(packed.code)}"
        seen[packed.code] = seq
        assert decode_trit_block_canonical(packed) == seq
        assert decode_trit_block_mul(packed.code) == seq
    assert len(seen) == 243


def test_mul_decode_matches_canonical_on_every_canonical_code():
    for trits in itertools.product(ALL_TRITS, repeat=5):
        code = encode_trit_block(list(trits), K5P8).code
        assert decode_trit_block_mul(code) == decode_trit_block_canonical(code, K5P8)


def test_mul_decode_total_on_all_bytes():
    # The multiplicative decoder accepts any byte, canonical or not, and
    # always emits legal trits.
    for code in range(256):
        trits = decode_trit_block_mul(code)
        assert len(trits) == 5
        assert all(t in ALL_TRITS for t in trits)


def test_lossy_p7_collides_exactly_115_times():
    lossy = CodecParams(5, 7, lossless=False)
    codes = {}
    collisions = 0
    for trits in itertools.product(ALL_TRITS, repeat=5):
        code = encode_trit_block(list(trits), lossy).code
        assert 0 <= code < 128
        if code in codes:
            collisions += 1
        codes[code] = trits
    # 243 blocks into 128 codes: the pigeonhole minimum is 115 collisions,
    # and this rounding scheme hits the minimum exactly.
    assert collisions == 115
    assert len(codes) == 128


@pytest.mark.parametrize("k,p", [(1, 2), (2, 4), (3, 5), (7, 12), (10, 16)])
def test_exhaustive_roundtrip_other_params(k, p):
    params = CodecParams(k, p)
    seen = set()
    for trits in itertools.product(ALL_TRITS, repeat=k):
        seq = list(trits)
        packed = encode_trit_block(seq, params)
        assert 0 <= packed.code < 2**p
        assert packed.code not in seen
        seen.add(packed.code)
        assert decode_trit_block_canonical(packed, params) == seq


def test_encode_block_rejects_bad_inputs():
    with pytest.raises(ValueError):
        encode_trit_block([], K5P8)
    with pytest.raises(ValueError):
        encode_trit_block([0] * 6, K5P8)
    with pytest.raises(ValueError):
        encode_trit_block([3], K5P8)


def test_decode_block_rejects_bad_inputs():
    with pytest.raises(ValueError):
        decode_trit_block_canonical(256, K5P8)
    with pytest.raises(ValueError):
        decode_trit_block_canonical(-1, K5P8)
    with pytest.raises(ValueError):
        decode_trit_block_canonical(0, K5P8, trit_count=6)
    with pytest.raises(ValueError):
        decode_trit_block_mul(300)
    with pytest.raises(ValueError):
        decode_trit_block_mul(0, trit_count=9)


def test_packed_code_validation():
    with pytest.raises(ValueError):
        PackedCode(code=-1, trit_count=5)
    with pytest.raises(ValueError):
        PackedCode(code=0, trit_count=0)


# ---------------------------------------------------------------------------
# byte streams of 5-trit codes
# ---------------------------------------------------------------------------


def test_trit_stream_examples():
    assert pack_trit_stream([], K5P8) == b""
    assert pack_trit_stream([0] * 10, K5P8) == bytes([128, 128])
    assert pack_trit_stream([1], K5P8) == bytes([213])


@pytest.mark.parametrize("n", [1, 4, 5, 6, 250, 2047])
def test_trit_stream_roundtrip(n):
    rng = np.random.default_rng(n)
    trits = (rng.integers(0, 3, size=n) - 1).tolist()
    stream = pack_trit_stream(trits, K5P8)
    assert len(stream) == -(-n // 5)
    assert unpack_trit_stream(stream, n, K5P8) == trits


def test_trit_stream_roundtrip_large():
    rng = np.random.default_rng(99)
    n = 10**6
    trits = (rng.integers(0, 3, size=n) - 1).tolist()
    assert unpack_trit_stream(pack_trit_stream(trits, K5P8), n, K5P8) == trits


def test_trit_stream_underrun_and_param_checks():
    with pytest.raises(DecodeUnderrunError):
        unpack_trit_stream(b"\x80", 6, K5P8)
    with pytest.raises(ValueError):
        pack_trit_stream([0], CodecParams(3, 5))
    with pytest.raises(ValueError):
        unpack_trit_stream(b"\x80", 3, CodecParams(3, 5))
