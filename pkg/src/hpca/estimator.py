"""Streaming top-k basis estimation over fixed-size blocks of signal windows.

The estimator keeps a d x k orthonormal basis and per-column scale estimates
and folds in one block of B windows at a time. Each update blends a history
term, which replays everything seen so far through the current eigenvalue
estimates, with a power-method term built from the incoming block, then
re-orthonormalizes. Block tau enters with weight 1/tau, so every block
contributes equally to the final estimate no matter when it arrived.

Memory stays at O(dk + dB + k^2) regardless of stream length: the d x d
correlation matrix is never formed and past blocks are never kept.
"""

from __future__ import annotations

import time
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass, field

import numpy as np

from .codec import BasisModel
from .errors import ParameterError, ProtocolError, ShapeError
from .linalg import (
    check_matrix,
    check_vector,
    column_norms,
    gram_apply,
    normalize_column_signs,
    qr_thin,
)


@dataclass(frozen=True)
class HpcaConfig:
    """Estimator parameters.

    window_len (d): samples per window; rank (k): basis columns to track;
    block_size (B): windows folded in per update; inner_loops (m): power
    iterations per update; seed: initial-basis draw.
    """

    window_len: int
    rank: int
    block_size: int
    inner_loops: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.window_len < 1:
            raise ParameterError(f"window_len must be >= 1, got {self.window_len}")
        if not 1 <= self.rank <= self.window_len:
            raise ParameterError(
                f"rank must satisfy 1 <= rank <= window_len, got rank={self.rank} "
                f"window_len={self.window_len}"
            )
        if self.block_size < 1:
            raise ParameterError(f"block_size must be >= 1, got {self.block_size}")
        if self.inner_loops < 1:
            raise ParameterError(f"inner_loops must be >= 1, got {self.inner_loops}")
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")

    @property
    def compression_ratio(self) -> float:
        return self.window_len / self.rank


@dataclass
class HpcaState:
    """Mutable estimator state: current basis, eigenvalue estimates, the
    count of absorbed blocks, and a buffer of windows awaiting a full block.

    Owned by one logical stream; not safe for concurrent mutation.
    """

    config: HpcaConfig
    basis: np.ndarray
    eigenvalues: np.ndarray
    blocks_seen: int = 0
    pending: list = field(default_factory=list, repr=False)

    @property
    def pending_count(self) -> int:
        return len(self.pending)


class StepTimer:
    """Accumulates wall-clock time spent in the two kernels of an update.

    Pass one to first_block/step to attribute time to the matrix products
    and the QR factorizations separately.
    """

    def __init__(self) -> None:
        self.matmul_s = 0.0
        self.qr_s = 0.0

    def reset(self) -> None:
        self.matmul_s = 0.0
        self.qr_s = 0.0

    @contextmanager
    def matmul(self):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.matmul_s += time.perf_counter() - t0

    @contextmanager
    def qr(self):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.qr_s += time.perf_counter() - t0


def _matmul_span(timer: StepTimer | None):
    return timer.matmul() if timer is not None else nullcontext()


def _qr_span(timer: StepTimer | None):
    return timer.qr() if timer is not None else nullcontext()


def _check_block(config: HpcaConfig, x_block) -> np.ndarray:
    x = check_matrix(x_block, "block")
    if x.shape != (config.window_len, config.block_size):
        raise ShapeError(
            f"block must be {config.window_len}x{config.block_size} "
            f"(one window per column), got {x.shape[0]}x{x.shape[1]}"
        )
    return x


def init_state(config: HpcaConfig) -> HpcaState:
    """Fresh state with a seeded random orthonormal basis and no data absorbed.

    The basis is the orthonormalization of a d x k standard Gaussian draw,
    sign-normalized so identical configs give bit-identical starts.
    """
    rng = np.random.default_rng(config.seed)
    draw = rng.standard_normal((config.window_len, config.rank))
    q, _ = qr_thin(draw)
    return HpcaState(
        config=config,
        basis=normalize_column_signs(q),
        eigenvalues=np.zeros(config.rank),
        blocks_seen=0,
    )


def first_block(state: HpcaState, x_block, timer: StepTimer | None = None) -> HpcaState:
    """Absorb the very first block.

    Runs m rounds of S = Q + (1/B) X (X^T Q) followed by Q <- qr(S); the
    column norms of the last S become the eigenvalue estimates. The identity
    term keeps the update well-posed when the block carries no energy.
    """
    if state.blocks_seen != 0:
        raise ProtocolError("first block already absorbed; use step for later blocks")
    cfg = state.config
    x = _check_block(cfg, x_block)
    q = state.basis
    s = q
    for _ in range(cfg.inner_loops):
        with _matmul_span(timer):
            s = q + gram_apply(x, q, 1.0 / cfg.block_size)
        with _qr_span(timer):
            q, _ = qr_thin(s)
    state.basis = q
    state.eigenvalues = column_norms(s)
    state.blocks_seen = 1
    return state


def step(state: HpcaState, x_block, timer: StepTimer | None = None) -> HpcaState:
    """Absorb block number tau = blocks_seen + 1.

    Runs m rounds of

        S = (tau-1)/tau * Q_prev (Lam_prev (Q_prev^T Q)) + 1/(tau*B) * X (X^T Q)
        Q <- qr(S)

    where Q_prev and Lam_prev stay fixed at the values from the previous
    block for all m rounds; only Q refreshes. The association order keeps
    the history term at O(dk^2) and the data term at O(dkB). Eigenvalue
    estimates are the column norms of the last S.
    """
    if state.blocks_seen < 1:
        raise ProtocolError("no first block absorbed yet; call first_block first")
    cfg = state.config
    x = _check_block(cfg, x_block)
    tau = state.blocks_seen + 1
    q_prev = state.basis
    # Q_prev * Lam_prev, fixed for the whole update
    scaled_prev = q_prev * state.eigenvalues
    hist_w = (tau - 1.0) / tau
    data_w = 1.0 / (tau * cfg.block_size)
    q = q_prev
    s = q
    for _ in range(cfg.inner_loops):
        with _matmul_span(timer):
            s = hist_w * (scaled_prev @ (q_prev.T @ q)) + gram_apply(x, q, data_w)
        with _qr_span(timer):
            q, _ = qr_thin(s)
    state.basis = q
    state.eigenvalues = column_norms(s)
    state.blocks_seen = tau
    return state


def push_window(state: HpcaState, window) -> bool:
    """Buffer one window; when block_size windows have accumulated, assemble
    the block (windows as columns, arrival order) and run the update.

    Returns True when this push completed a block, False while buffering.
    """
    w = check_vector(window, "window")
    if w.shape[0] != state.config.window_len:
        raise ShapeError(
            f"window has {w.shape[0]} samples, expected {state.config.window_len}"
        )
    state.pending.append(w.copy())
    if len(state.pending) < state.config.block_size:
        return False
    block = np.stack(state.pending, axis=1)
    state.pending.clear()
    if state.blocks_seen == 0:
        first_block(state, block)
    else:
        step(state, block)
    return True


def finalize(state: HpcaState) -> BasisModel:
    """Freeze the state into a BasisModel.

    Columns are permuted so eigenvalue estimates come out descending, and
    signs are normalized for deterministic output. Windows still waiting in
    the pending buffer are discarded: the update weights assume equal-size
    blocks, and folding in a fractional block would bias the average.
    """
    if state.blocks_seen < 1:
        raise ProtocolError("no data absorbed; cannot finalize an empty estimator")
    order = np.argsort(-state.eigenvalues, kind="stable")
    return BasisModel(
        window_len=state.config.window_len,
        rank=state.config.rank,
        basis=normalize_column_signs(state.basis[:, order]),
        eigenvalues=state.eigenvalues[order],
        trained_blocks=state.blocks_seen,
        source="hpca",
    )


def train(
    config: HpcaConfig, windows, timer: StepTimer | None = None
) -> BasisModel:
    """Run the full pipeline over a window set (one window per row) and
    return the finalized model. Trailing windows short of a full block are
    discarded, matching push_window/finalize semantics."""
    w = check_matrix(windows, "windows")
    if w.shape[1] != config.window_len:
        raise ShapeError(
            f"windows have {w.shape[1]} samples each, expected {config.window_len}"
        )
    n_blocks = w.shape[0] // config.block_size
    if n_blocks < 1:
        raise ParameterError(
            f"need at least {config.block_size} windows for one block, got {w.shape[0]}"
        )
    state = init_state(config)
    for t in range(n_blocks):
        block = w[t * config.block_size : (t + 1) * config.block_size].T
        if t == 0:
            first_block(state, block, timer)
        else:
            step(state, block, timer)
    return finalize(state)
