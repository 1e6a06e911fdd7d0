"""Roofline arithmetic and desk-scale kernel benchmarks.

`critical_batch` is the memory-bound/compute-bound crossover: with a
hardware FLOPs-to-bytes ratio R and w bits stored per weight, a matmul
stops being weight-bandwidth-bound once the batch exceeds
floor(R * (w/8) / 2) tokens (2 FLOPs per weight per token).

`bench` times the packed matmul (or a dense float baseline) on synthetic
matrices and reports effective weight bandwidth.  weight_bytes is always
the analytic footprint, never measured; wall times are medians over
repeated runs after warmup.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from tritpack.blocks import DType
from tritpack.linear import gemm, pack_matrix

MIN_REPETITIONS = 11
WARMUP_RUNS = 3

BENCH_HEADER = "format,rows,cols,batch,weight_bytes,wall_ns_median,gbytes_per_s,gflops"


def critical_batch(flops_per_byte: float, bits_per_weight: float) -> int:
    """Largest batch (tokens) for which the matmul stays memory-bound."""
    if flops_per_byte < 0:
        raise ValueError(f"flops_per_byte must be >= 0, got {flops_per_byte}")
    if not bits_per_weight > 0:
        raise ValueError(f"bits_per_weight must be positive, got {bits_per_weight}")
    return math.floor(flops_per_byte * (bits_per_weight / 8.0) / 2.0)


@dataclass(frozen=True)
class BenchRow:
    """One benchmark configuration and its timing summary."""

    format: str
    rows: int
    cols: int
    batch: int
    weight_bytes: int
    wall_ns_median: int
    gbytes_per_s: float
    gflops: float

    def csv_line(self) -> str:
        return (
            f"{self.format},{self.rows},{self.cols},{self.batch},{self.weight_bytes},"
            f"{self.wall_ns_median},{self.gbytes_per_s:.6f},{self.gflops:.6f}"
        )


def _weight_bytes(rows: int, cols: int, fmt: DType) -> int:
    if fmt.is_quantized:
        return rows * (-(-cols // 256)) * fmt.block_bytes
    return rows * cols * (4 if fmt is DType.F32 else 2)


def bench(
    rows: int,
    cols: int,
    fmt: DType,
    batch: int,
    repetitions: int = MIN_REPETITIONS,
    threads: int = 1,
    backend: str | None = None,
    seed: int = 0,
) -> BenchRow:
    """Time one matmul configuration; returns a report row.

    Formats: TQ2/TQ1 run the packed kernel; F16 runs a widen-then-BLAS
    dense baseline (the on-the-fly conversion mirrors dequantization);
    F32 runs plain BLAS.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix must be non-empty, got {rows}x{cols}")
    if batch < 1:
        raise ValueError("empty batch")
    if repetitions < MIN_REPETITIONS:
        raise ValueError(f"repetitions must be >= {MIN_REPETITIONS}, got {repetitions}")
    rng = np.random.default_rng(seed)
    W = rng.uniform(-1.0, 1.0, size=(rows, cols)).astype(np.float32)
    X = rng.uniform(-1.0, 1.0, size=(batch, cols)).astype(np.float32)

    if fmt.is_quantized:
        pm = pack_matrix(W, fmt, backend=backend)

        def run() -> np.ndarray:
            return gemm(pm, X, threads=threads, backend=backend)

    elif fmt is DType.F16:
        W16 = W.astype(np.float16)

        def run() -> np.ndarray:
            return X @ W16.astype(np.float32).T

    else:

        def run() -> np.ndarray:
            return X @ W.T

    for _ in range(WARMUP_RUNS):
        run()
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter_ns()
        run()
        times.append(time.perf_counter_ns() - t0)
    median_ns = max(int(round(statistics.median(times))), 1)
    return BenchRow(
        format=fmt.name.lower(),
        rows=rows,
        cols=cols,
        batch=batch,
        weight_bytes=_weight_bytes(rows, cols, fmt),
        wall_ns_median=median_ns,
        gbytes_per_s=_weight_bytes(rows, cols, fmt) / median_ns,
        gflops=2.0 * rows * cols * batch / median_ns,
    )
