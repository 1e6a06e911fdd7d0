"""tritpack command-line interface.

Exit codes: 0 success, 1 validation failure (bad values, failed checks),
2 I/O or file-format errors (including unknown flags, via argparse).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from tritpack import backend as _backend
from tritpack import container, perf, scaling
from tritpack.blocks import DType
from tritpack.linear import gemm, gemv_reference

VERIFY_REL_TOL = 1e-4
_VERIFY_VECTORS = 4


def _fmt_dims(dims) -> str:
    return "x".join(str(d) for d in dims)


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split("x"))
    except ValueError:
        raise ValueError(f"bad dims {text!r}, expected like 512x2048") from None
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"bad dims {text!r}, entries must be positive")
    return dims


def cmd_quantize(args: argparse.Namespace) -> int:
    fmt = DType.parse(args.format)
    if not fmt.is_quantized:
        raise ValueError(f"--format must be tq1 or tq2, got {args.format}")
    records = container.read_container(args.infile)
    out = [container.quantize_record(rec, fmt, backend=args.backend) for rec in records]
    container.write_container(args.out, out)
    for rec in out:
        print(f"{rec.name} {_fmt_dims(rec.dims)} f32 -> {rec.dtype.name.lower()} "
              f"({len(rec.data)} bytes)")
    print(f"wrote {len(out)} tensors to {args.out}")
    return 0


def cmd_dequantize(args: argparse.Namespace) -> int:
    records = container.read_container(args.infile)
    out = []
    for rec in records:
        if rec.dtype.is_quantized:
            expanded = container.dequantize_record(rec, backend=args.backend)
            print(f"{rec.name} {_fmt_dims(rec.dims)} {rec.dtype.name.lower()} -> f32 "
                  f"({len(expanded.data)} bytes)")
            out.append(expanded)
        else:
            print(f"{rec.name} {_fmt_dims(rec.dims)} {rec.dtype.name.lower()} (copied)")
            out.append(rec)
    container.write_container(args.out, out)
    print(f"wrote {len(out)} tensors to {args.out}")
    return 0


def _verify_packed(rec: container.TensorRecord, backend_name: str | None,
                   rng: np.random.Generator) -> list[str]:
    kern = _backend.resolve(backend_name)
    problems = []
    pm = rec.to_packed_matrix()
    scales = pm.scales.astype(np.float32)
    if not np.isfinite(scales).all():
        problems.append("non-finite block scale")
    if (scales < 0).any():
        problems.append("negative block scale")
    flat = pm.payload.reshape(-1)
    if pm.fmt is DType.TQ2:
        digits = kern.unpack_base4(flat)
        repacked = kern.pack_base4(digits)
    else:
        digits = kern.decode_base3(flat)
        repacked = kern.encode_base3(digits)
    if not np.array_equal(repacked, flat):
        problems.append("payload is not a canonical encoding (decode/encode roundtrip failed)")
    for _ in range(_VERIFY_VECTORS):
        x = rng.uniform(-1.0, 1.0, size=pm.cols).astype(np.float32)
        got = gemm(pm, x.reshape(1, -1), backend=backend_name)[0].astype(np.float64)
        want = gemv_reference(pm, x)
        norm = np.max(np.abs(want))
        err = np.max(np.abs(got - want)) / (norm if norm > 0 else 1.0)
        if not err <= VERIFY_REL_TOL:
            problems.append(f"gemv deviates from the dense float64 oracle "
                            f"(rel err {err:.3e} > {VERIFY_REL_TOL})")
            break
    return problems


def cmd_verify(args: argparse.Namespace) -> int:
    records = container.read_container(args.infile)
    rng = np.random.default_rng(0)
    failures = 0
    for rec in records:
        if rec.dtype.is_quantized:
            problems = _verify_packed(rec, args.backend, rng)
        else:
            problems = [] if np.isfinite(rec.to_array()).all() else ["non-finite values"]
        if problems:
            failures += 1
            for p in problems:
                print(f"FAIL {rec.name}: {p}")
        else:
            print(f"ok {rec.name} {_fmt_dims(rec.dims)} {rec.dtype.name.lower()}")
    if failures:
        print(f"{failures} of {len(records)} tensors failed verification")
        return 1
    print(f"verified {len(records)} tensors: OK")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    records = container.read_container(args.infile)
    total = sum(len(rec.data) for rec in records)
    print(f"TPK1 v{container.VERSION}, {len(records)} tensors, {total} data bytes")
    for rec in records:
        print(f"{rec.name} {rec.dtype.name.lower()} {_fmt_dims(rec.dims)} {len(rec.data)}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    fmt = DType.parse(args.format)
    if args.backend == "both":
        backends = _backend.available()
    else:
        backends = (args.backend,)
    print(perf.BENCH_HEADER)
    for name in backends:
        if fmt.is_quantized and len(backends) > 1:
            print(f"# backend={name}")
        row = perf.bench(
            rows=args.rows,
            cols=args.cols,
            fmt=fmt,
            batch=args.batch,
            repetitions=args.reps,
            threads=args.threads,
            backend=None if name in (None, "active") else name,
            seed=args.seed,
        )
        print(row.csv_line())
        if not fmt.is_quantized:
            break  # dense baselines don't touch the kernel backends
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    observations = scaling.read_observations_csv(args.csv)
    report = scaling.fit(observations)
    law = report.fit
    print(f"E = {law.E:.12g}")
    print(f"A = {law.A:.12g}")
    print(f"alpha = {law.alpha:.12g}")
    print(f"B = {law.B:.12g}")
    print(f"beta = {law.beta:.12g}")
    print(f"r_squared = {report.r_squared:.12g}")
    print(f"observations = {len(report.residuals)}")
    print(f"max_abs_residual = {max(abs(r) for r in report.residuals):.12g}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    law = scaling.PowerLawFit(E=args.E, A=args.A, alpha=args.alpha, B=args.B, beta=args.beta)
    n = args.n if args.n is not None else args.n_raw / 1e6
    d = args.d if args.d is not None else args.d_raw / 1e9
    print(f"{scaling.evaluate(law, n, d):.12g}")
    return 0


def cmd_critical_batch(args: argparse.Namespace) -> int:
    print(perf.critical_batch(args.flops_per_byte, args.bits))
    return 0


def cmd_footprint(args: argparse.Namespace) -> int:
    fmt = DType.parse(args.format)
    shapes = [_parse_dims(text) for text in args.dims]
    total = 0
    for dims in shapes:
        nbytes = container.expected_data_len(dims, fmt)
        total += nbytes
        print(f"{_fmt_dims(dims)} {fmt.name.lower()} {nbytes}")
    print(f"total {total}")
    return 0


def _add_backend_flag(p: argparse.ArgumentParser, both: bool = False) -> None:
    choices = ["python", "compiled"] + (["both"] if both else [])
    p.add_argument("--backend", choices=choices, default=None,
                   help="kernel backend (default: compiled when available)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tritpack",
                                     description="ternary weight packing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantize", help="quantize an F32 container to TQ1/TQ2")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", required=True, choices=["tq1", "tq2"])
    p.add_argument("--out", required=True)
    _add_backend_flag(p)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("dequantize", help="expand TQ1/TQ2 tensors back to F32")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_backend_flag(p)
    p.set_defaults(func=cmd_dequantize)

    p = sub.add_parser("verify", help="check codec roundtrips and gemv vs the oracle")
    p.add_argument("--in", dest="infile", required=True)
    _add_backend_flag(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("inspect", help="list container contents")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("bench", help="time packed matmul against dense baselines")
    p.add_argument("--rows", type=int, default=4096)
    p.add_argument("--cols", type=int, default=4096)
    p.add_argument("--format", default="tq2", choices=["tq1", "tq2", "f16", "f32"])
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--reps", type=int, default=perf.MIN_REPETITIONS)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_backend_flag(p, both=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fit", help="fit the scaling law to a loss table")
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate the scaling law at one point")
    p.add_argument("--E", type=float, required=True)
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    group_n = p.add_mutually_exclusive_group(required=True)
    group_n.add_argument("--n", type=float, help="model size in millions of parameters")
    group_n.add_argument("--n-raw", type=float, help="model size in raw parameters")
    group_d = p.add_mutually_exclusive_group(required=True)
    group_d.add_argument("--d", type=float, help="training data in billions of tokens")
    group_d.add_argument("--d-raw", type=float, help="training data in raw tokens")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("critical-batch", help="memory-bound batch-size crossover")
    p.add_argument("--flops-per-byte", type=float, required=True)
    p.add_argument("--bits", type=float, required=True)
    p.set_defaults(func=cmd_critical_batch)

    p = sub.add_parser("footprint", help="analytic storage bytes for tensor shapes")
    p.add_argument("--dims", action="append", required=True,
                   help="tensor shape like 512x2048 (repeatable)")
    p.add_argument("--format", required=True, choices=["tq1", "tq2", "f16", "f32"])
    p.set_defaults(func=cmd_footprint)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (container.ContainerError, scaling.ObservationTableError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
