"""Matrix-vector and small-batch matrix-matrix products on packed weights.

Weights stay in their TQ2/TQ1 block encoding and are expanded to trits on
the fly inside the kernel; activations are float32.  Each output row is

    y[i] = sum over blocks b of scale[i, b] * (inner sum of +-x terms)

where the inner sum combines the 256 activation terms of the block with a
fixed pairwise addition tree and the block partials are accumulated in
ascending order, all in float32.  That fixed order makes results
bitwise-identical for any thread count (rows are the parallel unit) and
across the two kernel backends.  The testing oracle (`gemv_reference`)
instead dequantizes fully and accumulates in float64.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from tritpack import backend as _backend
from tritpack.blocks import BLOCK_ELEMENTS, DType, QuantizationError, quantize_rows

_TQ1_DIGITS_PER_BLOCK = 260  # 52 codes x 5 digits; the last 4 are padding


@dataclass(frozen=True, eq=False)
class PackedMatrix:
    """A rows x cols matrix stored as per-row sequences of quantized blocks.

    payload: uint8 (rows, blocks_per_row, payload_bytes); scales: binary16
    (rows, blocks_per_row).  Rows start at block boundaries; the final
    block of each row is zero-padded past ``cols``.  Arrays are frozen
    after construction.
    """

    rows: int
    cols: int
    fmt: DType
    payload: np.ndarray
    scales: np.ndarray
    _scales_f32: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"matrix must be non-empty, got {self.rows}x{self.cols}")
        if not self.fmt.is_quantized:
            raise ValueError(f"{self.fmt.name} is not a packed format")
        nb = self.blocks_per_row
        if self.payload.shape != (self.rows, nb, self.fmt.payload_bytes):
            raise ValueError(
                f"payload shape {self.payload.shape} != {(self.rows, nb, self.fmt.payload_bytes)}"
            )
        if self.scales.shape != (self.rows, nb):
            raise ValueError(f"scales shape {self.scales.shape} != {(self.rows, nb)}")
        self.payload.setflags(write=False)
        self.scales.setflags(write=False)
        f32 = np.ascontiguousarray(self.scales, dtype=np.float32)
        f32.setflags(write=False)
        object.__setattr__(self, "_scales_f32", f32)

    @property
    def blocks_per_row(self) -> int:
        return -(-self.cols // BLOCK_ELEMENTS)

    @property
    def weight_bytes(self) -> int:
        """Exact bytes of weight data read per gemv: rows * blocks * block size."""
        return self.rows * self.blocks_per_row * self.fmt.block_bytes

    def to_block_bytes(self) -> bytes:
        """Serialize row-major: per block, payload bytes then the binary16 scale."""
        nb = self.blocks_per_row
        out = np.empty(
            (self.rows * nb,),
            dtype=np.dtype([("payload", np.uint8, self.fmt.payload_bytes), ("scale", "<f2")]),
        )
        out["payload"] = self.payload.reshape(self.rows * nb, -1)
        out["scale"] = self.scales.reshape(-1)
        return out.tobytes()

    @classmethod
    def from_block_bytes(cls, raw: bytes, rows: int, cols: int, fmt: DType) -> "PackedMatrix":
        """Rebuild from `to_block_bytes` output (also the container data layout)."""
        nb = -(-cols // BLOCK_ELEMENTS)
        rec = np.dtype([("payload", np.uint8, fmt.payload_bytes), ("scale", "<f2")])
        expected = rows * nb * rec.itemsize
        if len(raw) != expected:
            raise ValueError(f"expected {expected} bytes for {rows}x{cols} {fmt.name}, got {len(raw)}")
        arr = np.frombuffer(raw, dtype=rec)
        payload = arr["payload"].reshape(rows, nb, fmt.payload_bytes).copy()
        scales = arr["scale"].reshape(rows, nb).copy()
        return cls(rows=rows, cols=cols, fmt=fmt, payload=payload, scales=scales)


def pack_matrix(W, fmt: DType, backend: str | None = None) -> PackedMatrix:
    """Quantize a finite rows x cols matrix into per-row blocks of 256 columns.

    The final block of each row is padded with zeros (digit 1), which never
    contributes to products.
    """
    W = np.asarray(W, dtype=np.float32)
    if W.ndim != 2 or W.size == 0:
        raise QuantizationError(f"expected a non-empty 2-D matrix, got shape {W.shape}")
    if not np.isfinite(W).all():
        raise QuantizationError("matrix contains non-finite values")
    rows, cols = W.shape
    nb = -(-cols // BLOCK_ELEMENTS)
    padded = np.zeros((rows, nb * BLOCK_ELEMENTS), dtype=np.float32)
    padded[:, :cols] = W
    payload, scales = quantize_rows(padded.reshape(rows * nb, BLOCK_ELEMENTS), fmt, backend=backend)
    return PackedMatrix(
        rows=rows,
        cols=cols,
        fmt=fmt,
        payload=payload.reshape(rows, nb, fmt.payload_bytes),
        scales=scales.reshape(rows, nb),
    )


def _check_activations(W: PackedMatrix, X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float32)
    if X.ndim != 2 or X.shape[1] != W.cols:
        raise ValueError(f"activation batch shape {X.shape} does not match cols={W.cols}")
    if not np.isfinite(X).all():
        raise ValueError("activations contain non-finite values")
    return X


def _row_ranges(rows: int, threads: int) -> list[tuple[int, int]]:
    chunk = -(-rows // threads)
    return [(lo, min(lo + chunk, rows)) for lo in range(0, rows, chunk)]


def gemm(W: PackedMatrix, X, threads: int = 1, backend: str | None = None) -> np.ndarray:
    """Multiply a batch of activation vectors (batch, cols) -> (batch, rows).

    Row j of the result equals gemv(W, X[j]); results are bitwise
    independent of batch order and thread count.
    """
    kern = _backend.resolve(backend)
    X = _check_activations(W, X)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    batch = X.shape[0]
    if batch == 0:
        return np.empty((0, W.rows), dtype=np.float32)
    nb = W.blocks_per_row
    xpad = np.zeros((batch, nb * BLOCK_ELEMENTS), dtype=np.float32)
    xpad[:, : W.cols] = X
    out = np.empty((batch, W.rows), dtype=np.float32)
    kernel = kern.gemm_tq2 if W.fmt is DType.TQ2 else kern.gemm_tq1
    if threads == 1 or W.rows == 1:
        kernel(W.payload, W._scales_f32, xpad, out, 0, W.rows)
        return out
    ranges = _row_ranges(W.rows, threads)
    with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
        futures = [
            pool.submit(kernel, W.payload, W._scales_f32, xpad, out, lo, hi)
            for lo, hi in ranges
        ]
        for f in futures:
            f.result()
    return out


def gemv(W: PackedMatrix, x, threads: int = 1, backend: str | None = None) -> np.ndarray:
    """Multiply one activation vector of length cols -> (rows,) float32."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    return gemm(W, x.reshape(1, -1), threads=threads, backend=backend)[0]


def dequantize_matrix(W: PackedMatrix, dtype=np.float64) -> np.ndarray:
    """Expand to a dense rows x cols matrix, dropping pad columns.

    Decodes payloads with vectorized division/modulo arithmetic -- a route
    independent of both kernel backends -- so it can serve as an oracle.
    """
    nb = W.blocks_per_row
    if W.fmt is DType.TQ2:
        shifts = np.arange(4, dtype=np.uint8) * 2
        digits = (W.payload.reshape(W.rows, -1)[:, :, None] >> shifts) & 0x03
        digits = digits.reshape(W.rows, nb * BLOCK_ELEMENTS)
    else:
        codes = W.payload.reshape(W.rows, -1).astype(np.uint32)
        x = (codes * 243 + 13) >> 8
        powers = np.array([81, 27, 9, 3, 1], dtype=np.uint32)
        digits = (x[:, :, None] // powers) % 3
        digits = digits.reshape(W.rows, nb, _TQ1_DIGITS_PER_BLOCK)[:, :, :BLOCK_ELEMENTS]
        digits = digits.reshape(W.rows, nb * BLOCK_ELEMENTS)
    signs = digits.astype(dtype) - 1
    scales = W.scales.astype(dtype)
    dense = signs.reshape(W.rows, nb, BLOCK_ELEMENTS) * scales[:, :, None]
    return dense.reshape(W.rows, nb * BLOCK_ELEMENTS)[:, : W.cols]


def gemv_reference(W: PackedMatrix, x) -> np.ndarray:
    """Testing oracle: fully dequantize, then a dense float64 product."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (W.cols,):
        raise ValueError(f"activation shape {x.shape} does not match cols={W.cols}")
    if not np.isfinite(x).all():
        raise ValueError("activations contain non-finite values")
    return dequantize_matrix(W) @ x
