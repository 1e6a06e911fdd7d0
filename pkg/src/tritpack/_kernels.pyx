# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled kernel backend.

Same surface and bitwise-identical results as `_kernels_py`; see that
module's docstring for the pinned arithmetic.  Compiled with
-ffp-contract=off (see setup.py) so the multiply and add in the block
accumulation round separately, exactly like the fallback's numpy ops.
"""

import numpy as np

NAME = "compiled"

cdef enum:
    BLOCK = 256
    TQ2_PAYLOAD = 64
    TQ1_PAYLOAD = 52


def pack_base4(const unsigned char[::1] digits):
    """Pack digit groups of four into bytes; digits.size must be a multiple of 4."""
    cdef Py_ssize_t m = digits.shape[0] // 4
    out_arr = np.empty(m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = (digits[4 * i]
                      | (digits[4 * i + 1] << 2)
                      | (digits[4 * i + 2] << 4)
                      | (digits[4 * i + 3] << 6))
    return out_arr


def unpack_base4(const unsigned char[::1] words):
    """Unpack bytes into base-4 digits, four per byte."""
    cdef Py_ssize_t m = words.shape[0]
    out_arr = np.empty(4 * m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i
    cdef unsigned char w
    with nogil:
        for i in range(m):
            w = words[i]
            out[4 * i] = w & 0x03
            out[4 * i + 1] = (w >> 2) & 0x03
            out[4 * i + 2] = (w >> 4) & 0x03
            out[4 * i + 3] = (w >> 6) & 0x03
    return out_arr


def encode_base3(const unsigned char[::1] digits):
    """Encode digit groups of five into byte codes; digits.size must be a multiple of 5."""
    cdef Py_ssize_t m = digits.shape[0] // 5
    out_arr = np.empty(m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i
    cdef unsigned int n
    with nogil:
        for i in range(m):
            n = digits[5 * i]
            n = n * 3 + digits[5 * i + 1]
            n = n * 3 + digits[5 * i + 2]
            n = n * 3 + digits[5 * i + 3]
            n = n * 3 + digits[5 * i + 4]
            out[i] = <unsigned char>((n * 256 + 242) // 243)
    return out_arr


def decode_base3(const unsigned char[::1] codes):
    """Decode byte codes into digit groups of five via fixed-point extraction."""
    cdef Py_ssize_t m = codes.shape[0]
    out_arr = np.empty(5 * m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef unsigned int state, prod
    with nogil:
        for i in range(m):
            state = codes[i]
            for j in range(5):
                prod = state * 3
                out[5 * i + j] = <unsigned char>(prod >> 8)
                state = prod & 0xFF
    return out_arr


def quantize_blocks(const float[:, ::1] values):
    """Quantize float32 blocks of 256 to (digits uint8, absmax scales float32)."""
    cdef Py_ssize_t nb = values.shape[0]
    digits_arr = np.empty((nb, BLOCK), dtype=np.uint8)
    scales_arr = np.empty(nb, dtype=np.float32)
    cdef unsigned char[:, ::1] digits = digits_arr
    cdef float[::1] scales = scales_arr
    cdef Py_ssize_t i, t
    cdef float am, ax, x, inv, v
    cdef unsigned char d
    with nogil:
        for i in range(nb):
            am = 0.0
            for t in range(BLOCK):
                x = values[i, t]
                ax = -x if x < 0.0 else x
                if ax > am:
                    am = ax
            inv = (<float>1.0) / am if am > 0.0 else <float>0.0
            scales[i] = am
            for t in range(BLOCK):
                v = values[i, t] * inv
                d = 1
                if v >= 0.5:
                    d = 2
                elif v <= -0.5:
                    d = 0
                digits[i, t] = d
    return digits_arr, scales_arr


def dequantize_blocks(const unsigned char[:, ::1] digits, const float[::1] scales):
    """Reconstruct float32 values: scale * (digit - 1) per block."""
    cdef Py_ssize_t nb = digits.shape[0]
    out_arr = np.empty((nb, BLOCK), dtype=np.float32)
    cdef float[:, ::1] out = out_arr
    cdef Py_ssize_t i, t
    cdef float sign
    with nogil:
        for i in range(nb):
            for t in range(BLOCK):
                sign = <float>digits[i, t] - <float>1.0
                out[i, t] = sign * scales[i]
    return out_arr


cdef void _accumulate_row(const unsigned char[:, ::1] dg,
                          const float[:, ::1] scales,
                          const float[:, ::1] x,
                          float[:, ::1] out,
                          Py_ssize_t r, Py_ssize_t nb,
                          Py_ssize_t batch) noexcept nogil:
    # Per activation vector: build +-x / +0.0 terms for one block, collapse
    # them with the fixed pairwise tree, then fold scale * sum into the
    # float32 row accumulator, blocks in ascending order.
    cdef float terms[BLOCK]
    cdef float acc, xv
    cdef Py_ssize_t j, b, t, step, base
    cdef unsigned char d
    for j in range(batch):
        acc = 0.0
        for b in range(nb):
            base = b * BLOCK
            for t in range(BLOCK):
                d = dg[b, t]
                xv = x[j, base + t]
                if d == 2:
                    terms[t] = xv
                elif d == 0:
                    terms[t] = -xv
                else:
                    terms[t] = 0.0
            step = 128
            while step >= 1:
                for t in range(step):
                    terms[t] = terms[2 * t] + terms[2 * t + 1]
                step >>= 1
            acc = acc + scales[r, b] * terms[0]
        out[j, r] = acc


def gemm_tq2(const unsigned char[:, :, ::1] payload,
             const float[:, ::1] scales,
             const float[:, ::1] x,
             float[:, ::1] out,
             Py_ssize_t row0, Py_ssize_t row1):
    """Multiply TQ2 rows [row0, row1) by activation batch x into out.

    payload: uint8 (rows, nb, 64); scales: float32 (rows, nb);
    x: float32 (batch, nb*256); out: float32 (batch, rows), the
    [row0, row1) columns of which are overwritten.
    """
    cdef Py_ssize_t nb = payload.shape[1]
    cdef Py_ssize_t batch = x.shape[0]
    dg_arr = np.empty((nb, BLOCK), dtype=np.uint8)
    cdef unsigned char[:, ::1] dg = dg_arr
    cdef Py_ssize_t r, b, t
    cdef unsigned char w
    with nogil:
        for r in range(row0, row1):
            for b in range(nb):
                for t in range(TQ2_PAYLOAD):
                    w = payload[r, b, t]
                    dg[b, 4 * t] = w & 0x03
                    dg[b, 4 * t + 1] = (w >> 2) & 0x03
                    dg[b, 4 * t + 2] = (w >> 4) & 0x03
                    dg[b, 4 * t + 3] = (w >> 6) & 0x03
            _accumulate_row(dg, scales, x, out, r, nb, batch)


def gemm_tq1(const unsigned char[:, :, ::1] payload,
             const float[:, ::1] scales,
             const float[:, ::1] x,
             float[:, ::1] out,
             Py_ssize_t row0, Py_ssize_t row1):
    """Multiply TQ1 rows [row0, row1) by activation batch x into out.

    payload: uint8 (rows, nb, 52); per block, 51 codes carry five trits
    each and the tail code carries element 255 plus four pad trits.
    """
    cdef Py_ssize_t nb = payload.shape[1]
    cdef Py_ssize_t batch = x.shape[0]
    dg_arr = np.empty((nb, BLOCK), dtype=np.uint8)
    cdef unsigned char[:, ::1] dg = dg_arr
    cdef Py_ssize_t r, b, c, jj, idx
    cdef unsigned int state, prod
    with nogil:
        for r in range(row0, row1):
            for b in range(nb):
                for c in range(TQ1_PAYLOAD):
                    state = payload[r, b, c]
                    for jj in range(5):
                        prod = state * 3
                        idx = 5 * c + jj
                        if idx < BLOCK:
                            dg[b, idx] = <unsigned char>(prod >> 8)
                        state = prod & 0xFF
            _accumulate_row(dg, scales, x, out, r, nb, batch)
