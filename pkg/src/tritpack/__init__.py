"""tritpack: ternary LLM weight packing, packed matmul, and scaling-law fits.

Lossless trit codecs (2-bit base-4 and 1.6-bit base-3 block codes), TQ2/TQ1
block quantization with binary16 absmax scales, matrix-vector products that
dequantize on the fly, the TPK1 tensor container, and a power-law loss
fitter.  Hot kernels run in a compiled extension when available, with a
bitwise-identical numpy fallback (see `tritpack.backend`).
"""

from tritpack.backend import available as available_backends
from tritpack.backend import default_name as default_backend
from tritpack.blocks import (
    BLOCK_ELEMENTS,
    DType,
    QuantizationError,
    TernarizeResult,
    TQ1Block,
    TQ2Block,
    dequantize_block_tq1,
    dequantize_block_tq2,
    quantize_block_tq1,
    quantize_block_tq2,
    ternarize,
)
from tritpack.codec import (
    CapacityError,
    CodecParams,
    DecodeUnderrunError,
    K5P8,
    PackedCode,
    bits_per_trit,
    decode_trit_block_canonical,
    decode_trit_block_mul,
    encode_trit_block,
    pack_base4,
    unpack_base4,
)
from tritpack.container import (
    ContainerError,
    TensorRecord,
    expected_data_len,
    footprint,
    read_container,
    write_container,
)
from tritpack.linear import (
    PackedMatrix,
    dequantize_matrix,
    gemm,
    gemv,
    gemv_reference,
    pack_matrix,
)
from tritpack.perf import BenchRow, bench, critical_batch
from tritpack.scaling import (
    FitReport,
    LossObservation,
    PowerLawFit,
    UnidentifiableFitError,
    evaluate,
    fit,
    r_squared,
    read_observations_csv,
)

__version__ = "0.1.0"

__all__ = [
    "available_backends",
    "default_backend",
    "BLOCK_ELEMENTS",
    "DType",
    "QuantizationError",
    "TernarizeResult",
    "TQ1Block",
    "TQ2Block",
    "dequantize_block_tq1",
    "dequantize_block_tq2",
    "quantize_block_tq1",
    "quantize_block_tq2",
    "ternarize",
    "CapacityError",
    "CodecParams",
    "DecodeUnderrunError",
    "K5P8",
    "PackedCode",
    "bits_per_trit",
    "decode_trit_block_canonical",
    "decode_trit_block_mul",
    "encode_trit_block",
    "pack_base4",
    "unpack_base4",
    "ContainerError",
    "TensorRecord",
    "expected_data_len",
    "footprint",
    "read_container",
    "write_container",
    "PackedMatrix",
    "dequantize_matrix",
    "gemm",
    "gemv",
    "gemv_reference",
    "pack_matrix",
    "BenchRow",
    "bench",
    "critical_batch",
    "FitReport",
    "LossObservation",
    "PowerLawFit",
    "UnidentifiableFitError",
    "evaluate",
    "fit",
    "r_squared",
    "read_observations_csv",
    "__version__",
]
