"""Figure rendering for sweep and timing reports.

Everything draws straight to a file through the Agg backend; no display is
ever opened, so these work in headless runs and CI.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import SweepReport


def plot_sweep(report: SweepReport, path) -> None:
    """Mean RSNR against the inner-loop count m, one line per block size,
    with the batch reference as a dashed horizontal line."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for b in sorted({row.block_size for row in report.rows}):
        rows = sorted(
            (r for r in report.rows if r.block_size == b), key=lambda r: r.inner_loops
        )
        ax.plot(
            [r.inner_loops for r in rows],
            [r.mean_rsnr_db_hpca for r in rows],
            marker="o",
            label=f"B = {b}",
        )
    batch_db = report.rows[0].mean_rsnr_db_batch
    ax.axhline(batch_db, linestyle="--", color="k", linewidth=1, label="batch PCA")
    ax.set_xlabel("inner loops m")
    ax.set_ylabel("mean RSNR [dB]")
    ax.set_title(f"d = {report.window_len}, k = {report.rank}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_step_timing(rows, path) -> None:
    """Per-step time split for a list of (params dict, StepTiming) pairs.

    With several d values the components are drawn on log-log axes against
    d; with a single row it falls back to a bar split.
    """
    rows = list(rows)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if len(rows) > 1:
        ds = [p["d"] for p, _ in rows]
        ax.loglog(ds, [t.matmul_s for _, t in rows], marker="o", label="matmul")
        ax.loglog(ds, [t.qr_s for _, t in rows], marker="s", label="QR")
        ax.loglog(ds, [t.total_s for _, t in rows], marker="^", label="total")
        ax.set_xlabel("window length d")
        ax.set_ylabel("median step time [s]")
        params = rows[0][0]
        ax.set_title(f"k = {params['k']}, B = {params['B']}, m = {params['m']}")
    else:
        params, timing = rows[0]
        parts = ("matmul", "QR", "other")
        values = (timing.matmul_s, timing.qr_s, timing.other_s)
        ax.bar(parts, values)
        ax.set_ylabel("median step time [s]")
        ax.set_title(
            f"d = {params['d']}, k = {params['k']}, B = {params['B']}, m = {params['m']}"
        )
    ax.grid(True, alpha=0.3)
    if len(rows) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
