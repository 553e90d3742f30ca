"""Command-line front end tying the pipeline together.

Subcommands: gen (synthetic trace), train (streaming or batch model),
compress / decompress (coefficient streams), evaluate (RSNR report),
sweep (B x m quality grid), bench (step-timing split), meminfo (memory
models). Every subcommand is deterministic given its flags; reports go to
--out as CSV, with a rendered figure written next to them unless --no-plot
is given.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import batch, bench, codec, estimator, io, plots
from .errors import HpcaError, ParameterError

TRACE_FORMAT_FLAGS = {"f64": "float64-le", "i32": "int32-le", "csv": "csv"}
COEFF_FORMAT_FLAGS = {"f32": "float32-le", "f64": "float64-le"}


def _trace_meta(args) -> io.TraceMeta:
    return io.TraceMeta(
        sample_rate_hz=args.rate, sample_format=TRACE_FORMAT_FLAGS[args.trace_format]
    )


def _int_list(text: str) -> list:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _default_plot_path(out) -> Path:
    return Path(out).with_suffix(".png")


def cmd_gen(args) -> int:
    spec = io.load_synthetic_spec(args.spec)
    samples = io.generate_synthetic(spec)
    meta = io.TraceMeta(
        sample_rate_hz=spec.sample_rate_hz,
        sample_format=TRACE_FORMAT_FLAGS[args.trace_format],
    )
    io.write_trace(samples, args.out, meta)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    samples = io.read_trace(args.infile, _trace_meta(args))
    windows = io.window_stream(samples, args.d)
    if args.method == "batch":
        model = batch.batch_pca(windows.T, args.k)
    else:
        cfg = estimator.HpcaConfig(
            window_len=args.d,
            rank=args.k,
            block_size=args.B,
            inner_loops=args.m,
            seed=args.seed,
        )
        model = estimator.train(cfg, windows)
    io.write_model(model, args.out)
    print(
        f"trained {model.source} model on {windows.shape[0]} windows "
        f"(d={model.window_len}, k={model.rank}) -> {args.out}"
    )
    return 0


def cmd_compress(args) -> int:
    model = io.read_model(args.model)
    samples = io.read_trace(args.infile, _trace_meta(args))
    windows = io.window_stream(samples, model.window_len)
    coeffs = codec.compress(model, windows)
    io.write_compressed_stream(
        model, coeffs, args.out, coeff_format=COEFF_FORMAT_FLAGS[args.coeff_format]
    )
    print(f"compressed {windows.shape[0]} windows -> {args.out}")
    return 0


def cmd_decompress(args) -> int:
    model = io.read_model(args.model)
    stream = io.read_compressed_stream(args.infile)
    if (stream.window_len, stream.rank) != (model.window_len, model.rank):
        raise ParameterError(
            f"stream {args.infile} was written for d={stream.window_len} "
            f"k={stream.rank}, model has d={model.window_len} k={model.rank}"
        )
    recon = codec.reconstruct(model, stream.coefficients)
    io.write_trace(recon.reshape(-1), args.out, _trace_meta(args))
    print(f"reconstructed {stream.coefficients.shape[0]} windows -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model = io.read_model(args.model)
    samples = io.read_trace(args.infile, _trace_meta(args))
    windows = io.window_stream(samples, model.window_len)
    if windows.shape[0] < 1:
        raise ParameterError(f"{args.infile}: no complete window of {model.window_len} samples")
    report = codec.mean_rsnr_db(model, windows)
    print(f"windows: {report.n_windows}")
    print(f"lossless windows: {report.n_lossless}")
    if report.n_lossless == report.n_windows:
        print("mean RSNR: inf dB (every window reconstructed losslessly)")
    else:
        print(f"mean RSNR: {report.mean_db:.4f} dB")
    print(f"CR: {model.compression_ratio:.4f}")
    return 0


def cmd_sweep(args) -> int:
    train_samples = io.read_trace(args.train, _trace_meta(args))
    test_samples = io.read_trace(args.test, _trace_meta(args))
    report = bench.run_sweep(
        train_samples,
        test_samples,
        args.d,
        args.k,
        args.B,
        args.m,
        seed=args.seed,
        data_size=args.data_size,
    )
    if args.out is None:
        bench.write_sweep_csv(report, sys.stdout)
    else:
        bench.write_sweep_csv(report, args.out)
        print(f"wrote {len(report.rows)} rows to {args.out}")
    if args.gnuplot is not None:
        bench.write_sweep_gnuplot(report, args.gnuplot)
        print(f"wrote gnuplot data to {args.gnuplot}")
    plot = args.plot
    if plot is None and not args.no_plot and args.out is not None:
        plot = _default_plot_path(args.out)
    if plot is not None and not args.no_plot:
        plots.plot_sweep(report, plot)
        print(f"wrote figure to {plot}")
    return 0


def cmd_bench(args) -> int:
    rows = []
    for d in args.d:
        timing = bench.run_step_timing(
            d, args.k, args.B, args.m, repetitions=args.reps, seed=args.seed
        )
        params = {"d": d, "k": args.k, "B": args.B, "m": args.m, "reps": args.reps}
        rows.append((params, timing))
        fraction = bench.real_time_fraction(timing.total_s, d, args.B, args.rate)
        feasible = "real-time feasible" if fraction < 1.0 else "not real-time"
        print(
            f"d={d} k={args.k} B={args.B} m={args.m}: total {timing.total_s:.6f}s "
            f"(matmul {timing.matmul_s:.6f}s, qr {timing.qr_s:.6f}s, "
            f"other {timing.other_s:.6f}s), load {fraction:.3f} ({feasible})"
        )
    if args.out is None:
        bench.write_timing_csv(rows, sys.stdout)
    else:
        bench.write_timing_csv(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    plot = args.plot
    if plot is None and not args.no_plot and args.out is not None:
        plot = _default_plot_path(args.out)
    if plot is not None and not args.no_plot:
        plots.plot_step_timing(rows, plot)
        print(f"wrote figure to {plot}")
    return 0


def cmd_meminfo(args) -> int:
    hp = bench.hpca_memory_bytes(args.d, args.k, args.B, args.data_size)
    bt = bench.batch_memory_bytes(args.d, args.N, args.data_size)
    print(f"streaming memory: {hp} bytes (data_size={args.data_size})")
    print(f"batch memory: {bt} bytes (data_size={args.data_size})")
    print(f"ratio: {bt / hp:.2f}x")
    if args.data_size != 8:
        hp8 = bench.hpca_memory_bytes(args.d, args.k, args.B, 8)
        bt8 = bench.batch_memory_bytes(args.d, args.N, 8)
        print(f"streaming memory: {hp8} bytes (data_size=8)")
        print(f"batch memory: {bt8} bytes (data_size=8)")
    return 0


def _add_trace_flags(parser) -> None:
    parser.add_argument(
        "--trace-format",
        choices=sorted(TRACE_FORMAT_FLAGS),
        default="f64",
        help="raw trace encoding (default: f64)",
    )
    parser.add_argument(
        "--rate", type=float, default=100.0, help="sample rate in Hz (default: 100)"
    )


def _add_plot_flags(parser) -> None:
    parser.add_argument("--plot", default=None, help="figure output path (default: next to --out)")
    parser.add_argument("--no-plot", action="store_true", help="skip the figure")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hpca",
        description="Streaming-PCA compression toolkit for fixed-window sensor traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="render a synthetic trace from a JSON spec")
    p.add_argument("--spec", required=True, help="JSON spec file")
    p.add_argument("--out", required=True, help="output trace path")
    p.add_argument(
        "--trace-format", choices=sorted(TRACE_FORMAT_FLAGS), default="f64",
        help="output encoding (default: f64)",
    )
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model on a trace")
    p.add_argument("--in", dest="infile", required=True, help="input trace")
    p.add_argument("--out", required=True, help="output model path")
    p.add_argument("--d", type=int, default=500, help="window length (default: 500)")
    p.add_argument("--k", type=int, default=50, help="rank (default: 50)")
    p.add_argument("--B", type=int, default=50, help="block size in windows (default: 50)")
    p.add_argument("--m", type=int, default=3, help="inner loops per block (default: 3)")
    p.add_argument("--seed", type=int, default=0, help="basis init seed (default: 0)")
    p.add_argument(
        "--method", choices=("hpca", "batch"), default="hpca",
        help="streaming estimator or batch oracle (default: hpca)",
    )
    _add_trace_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compress", help="compress a trace against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True, help="input trace")
    p.add_argument("--out", required=True, help="output coefficient stream")
    p.add_argument(
        "--coeff-format", choices=sorted(COEFF_FORMAT_FLAGS), default="f64",
        help="stored coefficient width (default: f64)",
    )
    _add_trace_flags(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="reconstruct a trace from a stream")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True, help="input coefficient stream")
    p.add_argument("--out", required=True, help="output trace path")
    _add_trace_flags(p)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("evaluate", help="report reconstruction quality on a trace")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True, help="input trace")
    _add_trace_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="quality grid over block sizes and inner loops")
    p.add_argument("--train", required=True, help="training trace")
    p.add_argument("--test", required=True, help="held-out test trace")
    p.add_argument("--d", type=int, default=500)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--B", type=_int_list, default=[1, 10, 50], help="comma list (default: 1,10,50)")
    p.add_argument("--m", type=_int_list, default=[1, 2, 3], help="comma list (default: 1,2,3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data-size", type=int, default=4, help="bytes/value in the memory column")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--gnuplot", default=None, help="also write gnuplot-style data here")
    _add_plot_flags(p)
    _add_trace_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="per-step timing decomposition")
    p.add_argument(
        "--d", type=_int_list, default=[500],
        help="window length, or comma list for a scaling run (default: 500)",
    )
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--B", type=int, default=50)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--reps", type=int, default=5, help="timed repetitions (default: 5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=float, default=100.0, help="sample rate for the load figure")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    _add_plot_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("meminfo", help="memory-model figures and their ratio")
    p.add_argument("--d", type=int, default=500)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--B", type=int, default=1)
    p.add_argument("--N", type=int, default=8650, help="window count for the batch model")
    p.add_argument("--data-size", type=int, default=4)
    p.set_defaults(func=cmd_meminfo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HpcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        name = getattr(exc, "filename", None)
        where = f" ({name})" if name else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
