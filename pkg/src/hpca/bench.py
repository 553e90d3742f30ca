"""Benchmark harness: memory models, the (B, m) quality sweep, and per-step
timing split into matrix-multiplication and QR time.

Absolute seconds are hardware properties and never asserted anywhere; what
matters here is the decomposition and how it scales. Timing runs pin the
BLAS thread pool to one thread so the numbers are not distorted by
oversubscription on small machines.
"""

from __future__ import annotations

import csv
import statistics
import time
from contextlib import nullcontext
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .batch import batch_pca
from .codec import mean_rsnr_db
from .errors import ParameterError
from .estimator import HpcaConfig, StepTimer, first_block, init_state, step, train
from .io import window_stream

_WARMUP_STEPS = 2


def hpca_memory_bytes(d: int, k: int, block_size: int, data_size: int = 4) -> int:
    """Working-set size of the streaming estimator.

    Three d x k matrices (basis, update target, history product), the d x B
    block buffer, and the k x k mixing matrix, at data_size bytes per value.
    Exact by construction: data_size * (3dk + dB + k^2).
    """
    _require_positive(d=d, k=k, block_size=block_size, data_size=data_size)
    return data_size * (3 * d * k + d * block_size + k * k)


def batch_memory_bytes(d: int, n_windows: int, data_size: int = 4) -> int:
    """Working-set size of batch PCA: every window held at once plus the
    d x d eigenvector matrix, i.e. data_size * (N*d + d^2)."""
    _require_positive(d=d, n_windows=n_windows, data_size=data_size)
    return data_size * (n_windows * d + d * d)


def _require_positive(**values) -> None:
    for name, value in values.items():
        if value < 1:
            raise ParameterError(f"{name} must be >= 1, got {value}")


def real_time_fraction(step_time_s: float, d: int, block_size: int, sample_rate_hz: float) -> float:
    """Compute time per step over acquisition time per step.

    One step consumes d*B samples, which take d*B/sample_rate_hz seconds to
    acquire; a fraction below 1 means the estimator keeps up with the
    sensor in real time.
    """
    _require_positive(d=d, block_size=block_size)
    if not sample_rate_hz > 0:
        raise ParameterError(f"sample_rate_hz must be > 0, got {sample_rate_hz}")
    if step_time_s < 0:
        raise ParameterError(f"step_time_s must be >= 0, got {step_time_s}")
    return step_time_s / (d * block_size / sample_rate_hz)


@dataclass(frozen=True)
class SweepRow:
    block_size: int
    inner_loops: int
    mean_rsnr_db_hpca: float
    mean_rsnr_db_batch: float
    gap_db: float
    memory_bytes: int
    wall_time_s: float


@dataclass(frozen=True)
class SweepReport:
    window_len: int
    rank: int
    n_train_windows: int
    n_test_windows: int
    data_size: int
    rows: tuple


@dataclass(frozen=True)
class StepTiming:
    total_s: float
    matmul_s: float
    qr_s: float
    other_s: float


def run_sweep(
    train_samples,
    test_samples,
    window_len: int,
    rank: int,
    block_sizes,
    inner_loops_list,
    *,
    seed: int = 0,
    data_size: int = 4,
) -> SweepReport:
    """Train one estimator per (B, m) cell on the training trace and score
    every model on the held-out test trace; the batch reference is computed
    once and repeated in every row for self-contained output."""
    block_sizes = [int(b) for b in block_sizes]
    inner_loops_list = [int(m) for m in inner_loops_list]
    if not block_sizes or not inner_loops_list:
        raise ParameterError("block_sizes and inner_loops_list must be nonempty")
    train_w = window_stream(train_samples, window_len)
    test_w = window_stream(test_samples, window_len)
    if train_w.shape[0] < max(block_sizes):
        raise ParameterError(
            f"training corpus has {train_w.shape[0]} windows, shorter than one "
            f"block at B={max(block_sizes)}"
        )
    if test_w.shape[0] < 1:
        raise ParameterError("test corpus has no complete window")
    reference = batch_pca(train_w.T, rank)
    batch_db = mean_rsnr_db(reference, test_w).mean_db
    rows = []
    for b in block_sizes:
        for m in inner_loops_list:
            cfg = HpcaConfig(
                window_len=window_len, rank=rank, block_size=b, inner_loops=m, seed=seed
            )
            t0 = time.perf_counter()
            model = train(cfg, train_w)
            wall = time.perf_counter() - t0
            hpca_db = mean_rsnr_db(model, test_w).mean_db
            rows.append(
                SweepRow(
                    block_size=b,
                    inner_loops=m,
                    mean_rsnr_db_hpca=hpca_db,
                    mean_rsnr_db_batch=batch_db,
                    gap_db=batch_db - hpca_db,
                    memory_bytes=hpca_memory_bytes(window_len, rank, b, data_size),
                    wall_time_s=wall,
                )
            )
    return SweepReport(
        window_len=window_len,
        rank=rank,
        n_train_windows=train_w.shape[0],
        n_test_windows=test_w.shape[0],
        data_size=data_size,
        rows=tuple(rows),
    )


def run_step_timing(
    d: int, k: int, block_size: int, inner_loops: int, repetitions: int, *, seed: int = 0
) -> StepTiming:
    """Time steady-state estimator steps on random data.

    Two warm-up steps are discarded, then each of `repetitions` steps is
    timed with monotonic-clock spans around the matrix products and QR
    factorizations; per-component medians suppress scheduler noise. Runs
    with the BLAS pool limited to one thread.
    """
    _require_positive(d=d, k=k, block_size=block_size, inner_loops=inner_loops)
    if repetitions < 1:
        raise ParameterError(f"repetitions must be >= 1, got {repetitions}")
    cfg = HpcaConfig(
        window_len=d, rank=k, block_size=block_size, inner_loops=inner_loops, seed=seed
    )
    rng = np.random.default_rng(seed)
    state = init_state(cfg)
    totals, matmuls, qrs = [], [], []
    with threadpool_limits(limits=1):
        first_block(state, rng.standard_normal((d, block_size)))
        for _ in range(_WARMUP_STEPS):
            step(state, rng.standard_normal((d, block_size)))
        for _ in range(repetitions):
            block = rng.standard_normal((d, block_size))
            timer = StepTimer()
            t0 = time.perf_counter()
            step(state, block, timer)
            totals.append(time.perf_counter() - t0)
            matmuls.append(timer.matmul_s)
            qrs.append(timer.qr_s)
    matmul_s = statistics.median(matmuls)
    qr_s = statistics.median(qrs)
    # per-component medians can exceed the median total on noisy hosts;
    # clamp so other_s stays a true remainder
    total_s = max(statistics.median(totals), matmul_s + qr_s)
    return StepTiming(
        total_s=total_s,
        matmul_s=matmul_s,
        qr_s=qr_s,
        other_s=total_s - matmul_s - qr_s,
    )


SWEEP_CSV_COLUMNS = (
    "B",
    "m",
    "mean_rsnr_db_hpca",
    "mean_rsnr_db_batch",
    "gap_db",
    "memory_bytes",
    "wall_time_s",
)


def _out_stream(path_or_file):
    if hasattr(path_or_file, "write"):
        return nullcontext(path_or_file)
    return open(path_or_file, "w", newline="")


def write_sweep_csv(report: SweepReport, path) -> None:
    """path may be a filesystem path or an open text stream (e.g. stdout)."""
    with _out_stream(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for row in report.rows:
            writer.writerow(
                [
                    row.block_size,
                    row.inner_loops,
                    f"{row.mean_rsnr_db_hpca:.6f}",
                    f"{row.mean_rsnr_db_batch:.6f}",
                    f"{row.gap_db:.6f}",
                    row.memory_bytes,
                    f"{row.wall_time_s:.6f}",
                ]
            )


def write_sweep_gnuplot(report: SweepReport, path) -> None:
    """Sweep data as gnuplot blocks: one blank-line-separated block per B,
    columns m / RSNR(streaming) / RSNR(batch)."""
    blocks = []
    for b in sorted({row.block_size for row in report.rows}):
        lines = [f"# B = {b}"]
        for row in sorted(
            (r for r in report.rows if r.block_size == b), key=lambda r: r.inner_loops
        ):
            lines.append(
                f"{row.inner_loops} {row.mean_rsnr_db_hpca:.6f} {row.mean_rsnr_db_batch:.6f}"
            )
        blocks.append("\n".join(lines))
    with open(path, "w") as fh:
        fh.write("\n\n".join(blocks) + "\n")


TIMING_CSV_COLUMNS = ("d", "k", "B", "m", "reps", "total_s", "matmul_s", "qr_s", "other_s")


def write_timing_csv(rows, path) -> None:
    """rows: iterable of (params dict, StepTiming); path as in write_sweep_csv."""
    with _out_stream(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(TIMING_CSV_COLUMNS)
        for params, timing in rows:
            writer.writerow(
                [
                    params["d"],
                    params["k"],
                    params["B"],
                    params["m"],
                    params["reps"],
                    f"{timing.total_s:.9f}",
                    f"{timing.matmul_s:.9f}",
                    f"{timing.qr_s:.9f}",
                    f"{timing.other_s:.9f}",
                ]
            )
