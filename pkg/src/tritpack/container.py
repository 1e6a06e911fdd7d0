"""TPK1 tensor container: a flat file of quantized (or plain) tensors.

Layout, all integers little-endian::

    header:  magic b"TPK1" | version u32 = 1 | tensor_count u32      (12 bytes)
    record:  name_len u16 | name UTF-8 | dtype u8 | ndims u8
             | dims u64 * ndims | data_len u64
             | zero padding so data starts at a 32-byte file offset
             | data
    data:    F32/F16: raw element bytes, row-major.
             TQ2/TQ1: per 256-element block, payload bytes then the
             binary16 scale; rows = product of all dims but the last,
             ceil(last/256) blocks per row, final block zero-padded.

Reading validates magic, version, record completeness, and that data_len
matches the dims/dtype formula; each failure mode raises its own error
type.  write(read(write(x))) is byte-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from tritpack.blocks import BLOCK_ELEMENTS, DType
from tritpack.linear import PackedMatrix, dequantize_matrix, pack_matrix

MAGIC = b"TPK1"
VERSION = 1
DATA_ALIGN = 32

_HEADER = struct.Struct("<4sII")
_NAME_LEN = struct.Struct("<H")
_REC_FIXED = struct.Struct("<BB")  # dtype tag, ndims
_U64 = struct.Struct("<Q")

_NUMPY_DTYPES = {DType.F32: np.dtype("<f4"), DType.F16: np.dtype("<f2")}


class ContainerError(Exception):
    """Base for container format failures."""


class BadMagicError(ContainerError):
    pass


class VersionMismatchError(ContainerError):
    pass


class TruncatedError(ContainerError):
    pass


class SizeMismatchError(ContainerError):
    pass


def rows_cols(dims: Sequence[int]) -> tuple[int, int]:
    """Collapse leading dims into rows; the last (contiguous) dim is cols."""
    rows = 1
    for d in dims[:-1]:
        rows *= d
    return rows, dims[-1]


def expected_data_len(dims: Sequence[int], dtype: DType) -> int:
    """Exact data-section bytes for a tensor of the given shape and format."""
    if len(dims) == 0 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be positive, got {tuple(dims)}")
    if dtype.is_quantized:
        rows, cols = rows_cols(dims)
        blocks = -(-cols // BLOCK_ELEMENTS)
        return rows * blocks * dtype.block_bytes
    count = 1
    for d in dims:
        count *= d
    return count * (4 if dtype is DType.F32 else 2)


def footprint(shapes: Iterable[Sequence[int]], dtype: DType) -> int:
    """Total data bytes for a set of tensor shapes stored in one format."""
    return sum(expected_data_len(dims, dtype) for dims in shapes)


@dataclass(frozen=True)
class TensorRecord:
    """One named tensor: shape, format tag, and its serialized data bytes."""

    name: str
    dtype: DType
    dims: tuple[int, ...]
    data: bytes

    def __post_init__(self) -> None:
        if len(self.name.encode("utf-8")) > 0xFFFF:
            raise ValueError("tensor name longer than 65535 UTF-8 bytes")
        if len(self.dims) == 0 or len(self.dims) > 0xFF:
            raise ValueError(f"ndims must be in [1, 255], got {len(self.dims)}")
        expected = expected_data_len(self.dims, self.dtype)
        if len(self.data) != expected:
            raise SizeMismatchError(
                f"tensor {self.name!r}: data is {len(self.data)} bytes, "
                f"dims {self.dims} x {self.dtype.name} require {expected}"
            )

    @classmethod
    def from_array(cls, name: str, values: np.ndarray) -> "TensorRecord":
        """Wrap a float32 or float16 array as-is (no quantization)."""
        values = np.asarray(values)
        if values.dtype == np.float32:
            dtype = DType.F32
        elif values.dtype == np.float16:
            dtype = DType.F16
        else:
            raise ValueError(f"only float32/float16 arrays, got {values.dtype}")
        data = np.ascontiguousarray(values).astype(_NUMPY_DTYPES[dtype]).tobytes()
        return cls(name=name, dtype=dtype, dims=values.shape, data=data)

    @classmethod
    def from_packed(cls, name: str, W: PackedMatrix,
                    dims: Sequence[int] | None = None) -> "TensorRecord":
        """Wrap a PackedMatrix; ``dims`` may restore the original N-D shape."""
        if dims is None:
            dims = (W.rows, W.cols)
        rows, cols = rows_cols(dims)
        if (rows, cols) != (W.rows, W.cols):
            raise ValueError(f"dims {tuple(dims)} do not collapse to {W.rows}x{W.cols}")
        return cls(name=name, dtype=W.fmt, dims=tuple(dims), data=W.to_block_bytes())

    def to_array(self) -> np.ndarray:
        """Materialize an F32/F16 record as a numpy array in its stored shape."""
        if self.dtype.is_quantized:
            raise ValueError(f"tensor {self.name!r} is {self.dtype.name}; use to_packed_matrix")
        return np.frombuffer(self.data, dtype=_NUMPY_DTYPES[self.dtype]).reshape(self.dims)

    def to_packed_matrix(self) -> PackedMatrix:
        """Materialize a TQ2/TQ1 record as a PackedMatrix (leading dims collapsed)."""
        if not self.dtype.is_quantized:
            raise ValueError(f"tensor {self.name!r} is {self.dtype.name}; use to_array")
        rows, cols = rows_cols(self.dims)
        return PackedMatrix.from_block_bytes(self.data, rows, cols, self.dtype)


def quantize_record(rec: TensorRecord, fmt: DType, backend: str | None = None) -> TensorRecord:
    """Quantize an F32 record into TQ2/TQ1, keeping name and dims."""
    if rec.dtype is not DType.F32:
        raise ValueError(
            f"tensor {rec.name!r} is {rec.dtype.name}; quantize takes F32 input "
            f"(dequantize first)"
        )
    W = rec.to_array().reshape(rows_cols(rec.dims))
    return TensorRecord.from_packed(rec.name, pack_matrix(W, fmt, backend=backend), dims=rec.dims)


def dequantize_record(rec: TensorRecord, backend: str | None = None) -> TensorRecord:
    """Expand a TQ2/TQ1 record back to F32, keeping name and dims."""
    pm = rec.to_packed_matrix()
    dense = dequantize_matrix(pm, dtype=np.float32).reshape(rec.dims)
    return TensorRecord.from_array(rec.name, dense)


def write_container(path, tensors: Iterable[TensorRecord]) -> None:
    """Write records to ``path`` in order; deterministic for identical input."""
    tensors = list(tensors)
    with open(path, "wb") as fh:
        pos = fh.write(_HEADER.pack(MAGIC, VERSION, len(tensors)))
        for rec in tensors:
            name = rec.name.encode("utf-8")
            pos += fh.write(_NAME_LEN.pack(len(name)))
            pos += fh.write(name)
            pos += fh.write(_REC_FIXED.pack(int(rec.dtype), len(rec.dims)))
            for d in rec.dims:
                pos += fh.write(_U64.pack(d))
            pos += fh.write(_U64.pack(len(rec.data)))
            pad = -pos % DATA_ALIGN
            pos += fh.write(b"\x00" * pad)
            pos += fh.write(rec.data)


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.raw):
            raise TruncatedError(
                f"file ends inside {what}: need {n} bytes at offset {self.pos}, "
                f"have {len(self.raw) - self.pos}"
            )
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk


def read_container(path) -> list[TensorRecord]:
    """Parse a TPK1 file, validating structure and per-tensor sizes."""
    with open(path, "rb") as fh:
        raw = fh.read()
    rd = _Reader(raw)
    magic, version, count = _HEADER.unpack(rd.take(_HEADER.size, "header"))
    if magic != MAGIC:
        raise BadMagicError(f"not a TPK1 file (magic {magic!r})")
    if version != VERSION:
        raise VersionMismatchError(f"unsupported container version {version}")
    records = []
    for i in range(count):
        (name_len,) = _NAME_LEN.unpack(rd.take(_NAME_LEN.size, f"tensor {i} name length"))
        try:
            name = rd.take(name_len, f"tensor {i} name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ContainerError(f"tensor {i}: name is not valid UTF-8") from exc
        tag, ndims = _REC_FIXED.unpack(rd.take(_REC_FIXED.size, f"tensor {name!r} header"))
        try:
            dtype = DType(tag)
        except ValueError:
            raise ContainerError(f"tensor {name!r}: unknown dtype tag {tag}") from None
        if ndims == 0:
            raise ContainerError(f"tensor {name!r}: ndims must be >= 1")
        dims = tuple(
            _U64.unpack(rd.take(_U64.size, f"tensor {name!r} dims"))[0] for _ in range(ndims)
        )
        (data_len,) = _U64.unpack(rd.take(_U64.size, f"tensor {name!r} data length"))
        rd.take(-rd.pos % DATA_ALIGN, f"tensor {name!r} alignment padding")
        data = rd.take(data_len, f"tensor {name!r} data")
        if any(d < 1 for d in dims):
            raise ContainerError(f"tensor {name!r}: dims {dims} must be positive")
        expected = expected_data_len(dims, dtype)
        if data_len != expected:
            raise SizeMismatchError(
                f"tensor {name!r}: data_len {data_len} but dims {dims} x {dtype.name} "
                f"require {expected}"
            )
        records.append(TensorRecord(name=name, dtype=dtype, dims=dims, data=data))
    if rd.pos != len(raw):
        raise ContainerError(f"{len(raw) - rd.pos} trailing bytes after the last tensor")
    return records
