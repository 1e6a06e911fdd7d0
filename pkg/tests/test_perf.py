"""Tests for roofline arithmetic and the benchmark harness."""

from __future__ import annotations

import pytest

from tritpack.blocks import DType
from tritpack.perf import BENCH_HEADER, MIN_REPETITIONS, BenchRow, bench, critical_batch


# ---------------------------------------------------------------------------
# critical batch
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "ratio,bits,expected",
    [
        (105.0, 2.0, 13),
        (0.0, 16.0, 0),
        (105.0, 16.0, 105),
        (105.0, 2.0625, 13),  # floor(105 * 0.2578125 / 2) = floor(13.535...)
        (105.0, 1.6875, 11),
        (200.0, 8.0, 100),
    ],
)
def test_critical_batch_values(ratio, bits, expected):
    assert critical_batch(ratio, bits) == expected


def test_critical_batch_validation():
    with pytest.raises(ValueError):
        critical_batch(-1.0, 2.0)
    with pytest.raises(ValueError):
        critical_batch(10.0, 0.0)
    with pytest.raises(ValueError):
        critical_batch(10.0, -2.0)


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def test_bench_row_schema():
    assert BENCH_HEADER == "format,rows,cols,batch,weight_bytes,wall_ns_median,gbytes_per_s,gflops"
    row = bench(8, 256, DType.TQ2, batch=2)
    line = row.csv_line()
    fields = line.split(",")
    assert len(fields) == len(BENCH_HEADER.split(","))
    assert fields[:5] == ["tq2", "8", "256", "2", str(8 * 66)]


@pytest.mark.parametrize(
    "fmt,expected_bytes",
    [
        (DType.TQ2, 8 * 2 * 66),
        (DType.TQ1, 8 * 2 * 54),
        (DType.F16, 8 * 300 * 2),
        (DType.F32, 8 * 300 * 4),
    ],
)
def test_bench_weight_bytes_is_analytic(fmt, expected_bytes):
    row = bench(8, 300, fmt, batch=1)
    assert row.weight_bytes == expected_bytes


def test_bench_timing_fields_are_consistent():
    row = bench(4, 256, DType.TQ1, batch=1)
    assert row.wall_ns_median >= 1
    assert row.gbytes_per_s == pytest.approx(row.weight_bytes / row.wall_ns_median)
    assert row.gflops == pytest.approx(2.0 * 4 * 256 * 1 / row.wall_ns_median)


def test_bench_non_timing_fields_deterministic():
    a = bench(4, 256, DType.TQ2, batch=3)
    b = bench(4, 256, DType.TQ2, batch=3)
    assert (a.format, a.rows, a.cols, a.batch, a.weight_bytes) == (
        b.format,
        b.rows,
        b.cols,
        b.batch,
        b.weight_bytes,
    )


def test_bench_accepts_backend_and_threads():
    row = bench(4, 256, DType.TQ2, batch=1, backend="python", threads=2)
    assert isinstance(row, BenchRow)
    assert row.format == "tq2"


def test_bench_validation():
    with pytest.raises(ValueError, match="empty batch"):
        bench(4, 256, DType.TQ2, batch=0)
    with pytest.raises(ValueError):
        bench(4, 256, DType.TQ2, batch=1, repetitions=MIN_REPETITIONS - 1)
    with pytest.raises(ValueError):
        bench(0, 256, DType.TQ2, batch=1)
    with pytest.raises(ValueError):
        bench(4, 0, DType.F32, batch=1)
