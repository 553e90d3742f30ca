"""Streaming-PCA compression toolkit for fixed-window sensor traces.

The estimator maintains a top-k basis over a stream of signal-window
blocks in O(dk + dB + k^2) memory; the batch module provides the classical
full-memory PCA it is benchmarked against; codec/io turn a trained basis
into a lossy compression pipeline with persistent, checksummed file
formats; bench reproduces the memory/timing/quality studies.
"""

from .batch import batch_pca, correlation_matrix
from .bench import (
    StepTiming,
    SweepReport,
    SweepRow,
    batch_memory_bytes,
    hpca_memory_bytes,
    real_time_fraction,
    run_step_timing,
    run_sweep,
)
from .codec import (
    LOSSLESS_RSNR_DB,
    BasisModel,
    RsnrReport,
    compress,
    expected_reconstruction_error,
    mean_rsnr_db,
    reconstruct,
    rsnr_db,
)
from .errors import (
    AsymmetryError,
    ConvergenceError,
    CorruptionError,
    DegenerateBasisError,
    FormatError,
    HpcaError,
    ParameterError,
    ParseError,
    ProtocolError,
    ShapeError,
    UndefinedMetricError,
)
from .estimator import (
    HpcaConfig,
    HpcaState,
    StepTimer,
    finalize,
    first_block,
    init_state,
    push_window,
    step,
    train,
)
from .io import (
    CompressedStream,
    Mode,
    SyntheticSpec,
    TraceMeta,
    generate_synthetic,
    load_synthetic_spec,
    read_compressed_stream,
    read_model,
    read_trace,
    window_stream,
    write_compressed_stream,
    write_model,
    write_trace,
)

__version__ = "0.1.0"
