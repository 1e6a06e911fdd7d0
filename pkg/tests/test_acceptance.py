"""Acceptance criteria, one test per criterion.

Each test is named test_criterion_<nn>_<slug>; conftest.py prints a
one-line PASS/FAIL verdict per criterion at the end of the pytest run.
"""

from __future__ import annotations

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest
from mpmath import mp

from tritpack import codec, container
from tritpack.blocks import DType, TQ1Block, TQ2Block, dequantize_rows, quantize_rows
from tritpack.linear import dequantize_matrix, gemm, pack_matrix
from tritpack.perf import bench, critical_batch
from tritpack.scaling import LossObservation, PowerLawFit, evaluate, fit

ALL_TRITS = (-1, 0, 1)

TRI_CONSTANTS = PowerLawFit(E=2.19, A=4.73, alpha=0.32, B=5.18, beta=0.81)
N_GRID = (99.0, 190.0, 390.0, 560.0, 1100.0)
D_GRID = (20.0, 40.0, 75.0, 150.0)


def test_criterion_01_codec_exhaustive():
    """All 3^5 blocks roundtrip through both decoders; codes pairwise distinct; < 1 s."""
    t0 = time.perf_counter()
    codes = set()
    for trits in itertools.product(ALL_TRITS, repeat=5):
        seq = list(trits)
        packed = codec.encode_trit_block(seq, codec.K5P8)
        codes.add(packed.code)
        assert codec.decode_trit_block_canonical(packed) == seq
        assert codec.decode_trit_block_mul(packed.code) == seq
    assert len(codes) == 243
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"took {elapsed:.3f}s"


def test_criterion_02_capacity_necessity():
    """(k=5, p=7) cannot be lossless: brute force shows the pigeonhole >= 115 collisions; < 1 s."""
    t0 = time.perf_counter()
    lossy = codec.CodecParams(5, 7, lossless=False)
    seen = set()
    collisions = 0
    for trits in itertools.product(ALL_TRITS, repeat=5):
        code = codec.encode_trit_block(list(trits), lossy).code
        if code in seen:
            collisions += 1
        seen.add(code)
    assert collisions >= 1
    assert collisions >= 115  # pigeonhole floor: 243 blocks minus 128 codes
    assert collisions == 115  # this rounding scheme meets the floor exactly
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"took {elapsed:.3f}s"


def test_criterion_03_algorithm1_equivalence():
    """The multiply-based decoder equals division/modulo on all 243 canonical codes, exactly."""
    for trits in itertools.product(ALL_TRITS, repeat=5):
        code = codec.encode_trit_block(list(trits), codec.K5P8).code
        assert codec.decode_trit_block_mul(code) == codec.decode_trit_block_canonical(
            code, codec.K5P8
        )


@pytest.mark.parametrize(
    "fmt,block_bytes", [(DType.TQ2, 66), (DType.TQ1, 54)], ids=["tq2", "tq1"]
)
def test_criterion_04_block_sizes(fmt, block_bytes):
    """TQ2 blocks serialize to exactly 66 bytes, TQ1 to exactly 54, for 10^4 random blocks."""
    rng = np.random.default_rng(400 + int(fmt))
    values = rng.uniform(-8.0, 8.0, size=(10_000, 256)).astype(np.float32)
    payload, scales = quantize_rows(values, fmt)
    assert payload.shape == (10_000, block_bytes - 2)
    assert scales.dtype.itemsize == 2
    block_cls = TQ2Block if fmt is DType.TQ2 else TQ1Block
    for i in range(10_000):
        block = block_cls(payload=payload[i].tobytes(), scale=np.float16(scales[i]))
        assert len(block.to_bytes()) == block_bytes


def test_criterion_05_quantization_error_bound():
    """|x - x_hat| <= scale_f16/2 + |scale - scale_f16| for 10^5 random blocks in [-10, 10]."""
    rng = np.random.default_rng(500)
    checked = 0
    for fmt in (DType.TQ2, DType.TQ1):
        for _ in range(5):  # 5 chunks x 10^4 blocks per format
            values = rng.uniform(-10.0, 10.0, size=(10_000, 256)).astype(np.float32)
            payload, scales = quantize_rows(values, fmt)
            recon = dequantize_rows(payload, scales, fmt)
            absmax = np.max(np.abs(values), axis=1)  # exact float32 scale
            s16 = scales.astype(np.float32)
            bound = s16 / 2.0 + np.abs(absmax - s16)
            assert np.all(np.abs(values - recon) <= bound[:, None])
            checked += values.shape[0]
    assert checked == 10 * 10_000  # 10^5 blocks total, both formats covered


def test_criterion_06_gemv_oracle_and_thread_determinism():
    """Packed gemv matches the float64 dense oracle to 1e-4 on 512x2048 and
    4096x4096 ternary matrices with 100 activation vectors; thread counts
    1/2/8 agree bitwise."""
    rng = np.random.default_rng(600)
    shapes = ((512, 2048, DType.TQ2), (512, 2048, DType.TQ1), (4096, 4096, DType.TQ2))
    for rows, cols, fmt in shapes:
        W = (rng.integers(0, 3, size=(rows, cols)) - 1).astype(np.float32)
        pm = pack_matrix(W, fmt)
        X = rng.uniform(-1.0, 1.0, size=(100, cols)).astype(np.float32)

        Y = gemm(pm, X, threads=1)
        ref = (dequantize_matrix(pm) @ X.astype(np.float64).T).T
        num = np.max(np.abs(Y.astype(np.float64) - ref), axis=1)
        den = np.max(np.abs(ref), axis=1)
        rel = float(np.max(num / den))
        assert rel <= 1e-4, f"{rows}x{cols} {fmt.name}: rel err {rel:.3e}"

        for threads in (2, 8):
            Yt = gemm(pm, X, threads=threads)
            assert np.array_equal(Y.view(np.uint32), Yt.view(np.uint32)), (
                f"{rows}x{cols} {fmt.name}: threads={threads} not bitwise identical"
            )


def test_criterion_07_critical_batch():
    """critical_batch(105, 2) = 13 (the memory-bound crossover)."""
    assert critical_batch(105, 2) == 13
    assert critical_batch(0, 8) == 0
    assert critical_batch(105, 16) == 105


def test_criterion_08_scaling_law():
    """evaluate matches a high-precision oracle to 1e-9 at 20 grid points;
    noiseless synthetic fit recovers all five constants within 2% with
    R^2 >= 0.9999 in < 60 s; with 0.5% noise R^2 >= 0.99 over 20 seeds."""
    # (a) evaluation oracle
    with mp.workdps(50):
        for n in N_GRID:
            for d in D_GRID:
                exact = (
                    mp.mpf(TRI_CONSTANTS.E)
                    + mp.mpf(TRI_CONSTANTS.A) * mp.power(mp.mpf(n), -mp.mpf(TRI_CONSTANTS.alpha))
                    + mp.mpf(TRI_CONSTANTS.B) * mp.power(mp.mpf(d), -mp.mpf(TRI_CONSTANTS.beta))
                )
                assert abs(evaluate(TRI_CONSTANTS, n, d) - float(exact)) <= 1e-9

    # (b) noiseless recovery
    t0 = time.perf_counter()
    noiseless = [
        LossObservation(n, d, evaluate(TRI_CONSTANTS, n, d)) for n in N_GRID for d in D_GRID
    ]
    report = fit(noiseless)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"fit took {elapsed:.1f}s"
    for name in ("E", "A", "alpha", "B", "beta"):
        got = getattr(report.fit, name)
        want = getattr(TRI_CONSTANTS, name)
        assert abs(got - want) / want <= 0.02, f"{name}: {got} vs {want}"
    assert report.r_squared >= 0.9999

    # (c) noisy robustness
    for seed in range(20):
        noise_rng = np.random.default_rng(seed)
        noisy = [
            LossObservation(
                o.n_params, o.d_tokens, o.loss * (1.0 + 0.005 * noise_rng.standard_normal())
            )
            for o in noiseless
        ]
        r2 = fit(noisy).r_squared
        assert r2 >= 0.99, f"seed {seed}: r_squared {r2}"


def test_criterion_09_byte_traffic_ratio():
    """Analytic F16/TQ2 weight-byte ratio equals 16/2.0625 at any 256-multiple
    shape, to 1e-12 (exactly 256/33 as a rational); wall-clock speedup is
    reported informationally with no threshold."""
    for shape in [(256, 256), (512, 2048), (4096, 4096), (1024 * 1024,)]:
        f16 = container.footprint([shape], DType.F16)
        tq2 = container.footprint([shape], DType.TQ2)
        assert Fraction(f16, tq2) == Fraction(256, 33)
        assert abs(f16 / tq2 - 16 / 2.0625) <= 1e-12

    # Informational wall-clock comparison (hardware-dependent, no assertion).
    dense = bench(256, 1024, DType.F16, batch=1)
    packed = bench(256, 1024, DType.TQ2, batch=1)
    assert Fraction(dense.weight_bytes, packed.weight_bytes) == Fraction(256, 33)
    print(
        f"informational: f16 {dense.wall_ns_median} ns vs tq2 {packed.wall_ns_median} ns "
        f"(byte ratio {dense.weight_bytes / packed.weight_bytes:.6f}, "
        f"wall ratio {dense.wall_ns_median / packed.wall_ns_median:.3f})"
    )


def test_criterion_10_container_roundtrip(tmp_path):
    """write -> read -> write is bitwise idempotent for a mixed-dtype container
    with >= 3 tensors including a degenerate 1-element tensor."""
    rng = np.random.default_rng(1000)
    records = [
        container.TensorRecord.from_array(
            "tok_embeddings", rng.normal(size=(8, 32)).astype(np.float32)
        ),
        container.TensorRecord.from_array("norm.scale", np.array([0.5], dtype=np.float16)),
        container.TensorRecord.from_packed(
            "layers.0.wq",
            pack_matrix(rng.normal(size=(16, 700)).astype(np.float32), DType.TQ2),
        ),
        container.TensorRecord.from_packed(
            "layers.0.w1",
            pack_matrix(rng.normal(size=(4, 300)).astype(np.float32), DType.TQ1),
            dims=(2, 2, 300),
        ),
        container.TensorRecord.from_array("one", np.array([[2.0]], dtype=np.float32)),
    ]
    assert len(records) >= 3
    assert {r.dtype for r in records} == {DType.F32, DType.F16, DType.TQ2, DType.TQ1}
    assert any(int(np.prod(r.dims)) == 1 for r in records)

    first = tmp_path / "first.tpk"
    second = tmp_path / "second.tpk"
    write1 = container.write_container(first, records)
    back = container.read_container(first)
    assert back == records
    container.write_container(second, back)
    assert first.read_bytes() == second.read_bytes()
    assert write1 is None
