"""Trace ingestion, synthetic signal generation, and binary persistence.

Two fixed little-endian file formats live here: "HPCA" for trained models
and "HPCZ" for compressed coefficient streams. Both carry a trailing CRC32
over everything before it, so a flipped byte is detected rather than
silently decoded. float64 payloads round-trip bit-exactly; the stream
format can narrow coefficients to float32, which is lossy (relative error
up to 2^-23 per coefficient) and must be requested explicitly.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec import BasisModel
from .errors import CorruptionError, FormatError, ParameterError, ParseError, ShapeError
from .linalg import check_matrix, check_vector

MODEL_MAGIC = b"HPCA"
STREAM_MAGIC = b"HPCZ"
FORMAT_VERSION = 1

TRACE_FORMATS = ("int32-le", "float64-le", "csv")
COEFF_FORMATS = ("float32-le", "float64-le")
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class TraceMeta:
    """How a raw trace file is encoded and where it came from."""

    sample_rate_hz: float
    sample_format: str
    sensor_id: str = ""
    axis: str = "x"

    def __post_init__(self) -> None:
        if not self.sample_rate_hz > 0:
            raise ParameterError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if self.sample_format not in TRACE_FORMATS:
            raise ParameterError(
                f"sample_format must be one of {TRACE_FORMATS}, got {self.sample_format!r}"
            )
        if self.axis not in AXES:
            raise ParameterError(f"axis must be one of {AXES}, got {self.axis!r}")


@dataclass(frozen=True)
class Mode:
    """One damped sinusoidal component of a synthetic trace.

    The envelope is ``amplitude * exp(-damping * t)`` plus, when
    ``onset_amplitude`` is nonzero, a second term
    ``onset_amplitude * exp(-onset_damping * t)`` sharing the carrier and
    phase. The extra term models the brief high-damping transient that a
    freshly excited resonance shows before settling into its linear decay.
    """

    frequency_hz: float
    amplitude: float
    damping: float = 0.0
    onset_amplitude: float = 0.0
    onset_damping: float = 0.0


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a reproducible synthetic vibration trace: a sum of damped
    sinusoids with seeded random phases plus white Gaussian noise."""

    seed: int
    duration_s: float
    sample_rate_hz: float
    modes: tuple
    noise_std: float

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")
        if not self.duration_s > 0:
            raise ParameterError(f"duration_s must be > 0, got {self.duration_s}")
        if not self.sample_rate_hz > 0:
            raise ParameterError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if not self.noise_std >= 0:
            raise ParameterError(f"noise_std must be >= 0, got {self.noise_std}")
        object.__setattr__(self, "modes", tuple(self.modes))
        nyquist = self.sample_rate_hz / 2.0
        for mode in self.modes:
            if not 0 < mode.frequency_hz < nyquist:
                raise ParameterError(
                    f"mode frequency {mode.frequency_hz} Hz must lie in (0, {nyquist}) "
                    f"at sample rate {self.sample_rate_hz} Hz"
                )
            if not math.isfinite(mode.amplitude):
                raise ParameterError("mode amplitude must be finite")
            if not mode.damping >= 0:
                raise ParameterError(f"mode damping must be >= 0, got {mode.damping}")
            if not math.isfinite(mode.onset_amplitude):
                raise ParameterError("mode onset_amplitude must be finite")
            if not mode.onset_damping >= 0:
                raise ParameterError(
                    f"mode onset_damping must be >= 0, got {mode.onset_damping}"
                )


def load_synthetic_spec(path) -> SyntheticSpec:
    """Read a SyntheticSpec from a JSON file."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ParseError(f"expected a JSON object in {path}")
    try:
        modes = tuple(
            Mode(
                frequency_hz=float(m["frequency_hz"]),
                amplitude=float(m["amplitude"]),
                damping=float(m.get("damping", 0.0)),
                onset_amplitude=float(m.get("onset_amplitude", 0.0)),
                onset_damping=float(m.get("onset_damping", 0.0)),
            )
            for m in doc["modes"]
        )
        return SyntheticSpec(
            seed=int(doc["seed"]),
            duration_s=float(doc["duration_s"]),
            sample_rate_hz=float(doc["sample_rate_hz"]),
            modes=modes,
            noise_std=float(doc["noise_std"]),
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r} in {path}") from exc
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed field in {path}: {exc}") from exc


def generate_synthetic(spec: SyntheticSpec) -> np.ndarray:
    """Render the trace described by the spec.

    Phases are drawn first and noise second from one seeded generator, so a
    given seed pins the entire trace bit-for-bit.
    """
    n = round(spec.duration_s * spec.sample_rate_hz)
    t = np.arange(n, dtype=np.float64) / spec.sample_rate_hz
    rng = np.random.default_rng(spec.seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, len(spec.modes))
    y = np.zeros(n)
    for mode, phase in zip(spec.modes, phases):
        envelope = mode.amplitude * (np.exp(-mode.damping * t) if mode.damping else 1.0)
        if mode.onset_amplitude:
            envelope = envelope + mode.onset_amplitude * np.exp(-mode.onset_damping * t)
        y += envelope * np.sin(2.0 * math.pi * mode.frequency_hz * t + phase)
    if spec.noise_std > 0:
        y += spec.noise_std * rng.standard_normal(n)
    return y


def read_trace(path, meta: TraceMeta) -> np.ndarray:
    """Load a raw trace into a 1-D float64 array, in acquisition order."""
    raw = Path(path).read_bytes()
    if meta.sample_format == "int32-le":
        return _read_binary_trace(path, raw, "<i4", 4)
    if meta.sample_format == "float64-le":
        return _read_binary_trace(path, raw, "<f8", 8)
    return _read_csv_trace(path, raw)


def _read_binary_trace(path, raw: bytes, dtype: str, width: int) -> np.ndarray:
    extra = len(raw) % width
    if extra:
        raise ParseError(
            f"{path}: truncated final record ({extra} trailing bytes, "
            f"record width {width})",
            byte=len(raw) - extra,
        )
    return np.frombuffer(raw, dtype=dtype).astype(np.float64)


def _read_csv_trace(path, raw: bytes) -> np.ndarray:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 text", byte=exc.start) from exc
    samples = []
    offset = 0
    for lineno, line in enumerate(text.splitlines(keepends=True), start=1):
        start = offset
        offset += len(line.encode("utf-8"))
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            samples.append(float(stripped))
        except ValueError:
            raise ParseError(
                f"{path}: not a number: {stripped!r}", line=lineno, byte=start
            ) from None
    return np.asarray(samples, dtype=np.float64)


def write_trace(samples, path, meta: TraceMeta) -> None:
    """Store a 1-D sample sequence under the given format.

    int32-le requires every sample to be exactly integral and in range;
    float64-le and csv round-trip float64 samples exactly.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"samples must be 1-D, got ndim={arr.ndim}")
    if meta.sample_format == "int32-le":
        if arr.size and (np.any(~np.isfinite(arr)) or np.any(arr != np.trunc(arr))):
            raise ParameterError("int32-le requires exactly integral samples")
        if arr.size and (arr.min() < -(2**31) or arr.max() > 2**31 - 1):
            raise ParameterError("sample out of int32 range")
        Path(path).write_bytes(arr.astype("<i4").tobytes())
    elif meta.sample_format == "float64-le":
        Path(path).write_bytes(arr.astype("<f8").tobytes())
    else:
        lines = "".join(repr(float(s)) + "\n" for s in arr)
        Path(path).write_text(lines, encoding="utf-8")


def window_stream(samples, window_len: int) -> np.ndarray:
    """Chop a sample sequence into non-overlapping windows, one per row.

    Returns floor(len/window_len) rows; the trailing remainder is dropped.
    """
    if window_len < 1:
        raise ParameterError(f"window_len must be >= 1, got {window_len}")
    arr = check_vector(samples, "samples")
    n = arr.shape[0] // window_len
    return arr[: n * window_len].reshape(n, window_len).copy()


def _checked_payload(path, raw: bytes, magic: bytes, kind: str) -> bytes:
    if len(raw) < len(magic) + 2:
        raise CorruptionError(f"{path}: file too short for a {kind} header")
    if raw[:4] != magic:
        raise FormatError(
            f"{path}: bad magic {raw[:4]!r}, expected {magic!r}"
        )
    if len(raw) < 4 + 2 + 4:
        raise CorruptionError(f"{path}: file too short for a {kind} header")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    payload, (stored_crc,) = raw[:-4], struct.unpack_from("<I", raw, len(raw) - 4)
    actual = zlib.crc32(payload) & 0xFFFFFFFF
    if actual != stored_crc:
        raise CorruptionError(
            f"{path}: CRC mismatch (stored {stored_crc:#010x}, computed {actual:#010x})"
        )
    return payload


def write_model(model: BasisModel, path) -> None:
    """Persist a BasisModel; read_model returns it bit-exactly."""
    src = model.source.encode("utf-8")
    if len(src) > 255:
        raise ParameterError("source tag longer than 255 bytes")
    header = struct.pack(
        "<4sHIIQB",
        MODEL_MAGIC,
        FORMAT_VERSION,
        model.window_len,
        model.rank,
        model.trained_blocks,
        len(src),
    )
    payload = (
        header
        + src
        + np.ascontiguousarray(model.eigenvalues, dtype="<f8").tobytes()
        + np.ascontiguousarray(model.basis, dtype="<f8").tobytes()
    )
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    Path(path).write_bytes(payload + struct.pack("<I", crc))


def read_model(path) -> BasisModel:
    raw = Path(path).read_bytes()
    payload = _checked_payload(path, raw, MODEL_MAGIC, "model")
    fixed = struct.calcsize("<4sHIIQB")
    if len(payload) < fixed:
        raise CorruptionError(f"{path}: header truncated")
    _, _, d, k, trained, src_len = struct.unpack_from("<4sHIIQB", payload, 0)
    expected = fixed + src_len + 8 * k + 8 * d * k
    if len(payload) != expected:
        raise CorruptionError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    pos = fixed
    source = payload[pos : pos + src_len].decode("utf-8")
    pos += src_len
    lam = np.frombuffer(payload, dtype="<f8", count=k, offset=pos).astype(np.float64)
    pos += 8 * k
    q = (
        np.frombuffer(payload, dtype="<f8", count=d * k, offset=pos)
        .astype(np.float64)
        .reshape(d, k)
    )
    return BasisModel(
        window_len=d,
        rank=k,
        basis=q,
        eigenvalues=lam,
        trained_blocks=trained,
        source=source,
    )


@dataclass(frozen=True)
class CompressedStream:
    """Decoded contents of an HPCZ file: the model dimensions it was written
    against plus the coefficient rows (widened to float64 after reading)."""

    window_len: int
    rank: int
    coeff_format: str
    coefficients: np.ndarray


def write_compressed_stream(
    model: BasisModel, coefficients, path, coeff_format: str = "float64-le"
) -> None:
    """Store compressed windows (one coefficient row per window).

    float32-le cuts the stream size in half relative to float64-le but is
    lossy: each coefficient may move by up to 2^-23 in relative terms.
    """
    if coeff_format not in COEFF_FORMATS:
        raise ParameterError(
            f"coeff_format must be one of {COEFF_FORMATS}, got {coeff_format!r}"
        )
    coeffs = np.asarray(coefficients, dtype=np.float64)
    if coeffs.ndim != 2:
        raise ShapeError(f"coefficients must be 2-D, got ndim={coeffs.ndim}")
    if coeffs.shape[0] > 0:
        check_matrix(coeffs, "coefficients")
    if coeffs.shape[1] != model.rank:
        raise ShapeError(
            f"coefficient rows have length {coeffs.shape[1]}, model expects {model.rank}"
        )
    width = 4 if coeff_format == "float32-le" else 8
    header = struct.pack(
        "<4sHIIBQ",
        STREAM_MAGIC,
        FORMAT_VERSION,
        model.window_len,
        model.rank,
        width,
        coeffs.shape[0],
    )
    dtype = "<f4" if width == 4 else "<f8"
    payload = header + np.ascontiguousarray(coeffs, dtype=dtype).tobytes()
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    Path(path).write_bytes(payload + struct.pack("<I", crc))


def read_compressed_stream(path) -> CompressedStream:
    raw = Path(path).read_bytes()
    payload = _checked_payload(path, raw, STREAM_MAGIC, "stream")
    fixed = struct.calcsize("<4sHIIBQ")
    if len(payload) < fixed:
        raise CorruptionError(f"{path}: header truncated")
    _, _, d, k, width, count = struct.unpack_from("<4sHIIBQ", payload, 0)
    if width not in (4, 8):
        raise FormatError(f"{path}: invalid coefficient width {width}")
    expected = fixed + width * k * count
    if len(payload) != expected:
        raise CorruptionError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    dtype = "<f4" if width == 4 else "<f8"
    coeffs = (
        np.frombuffer(payload, dtype=dtype, count=k * count, offset=fixed)
        .astype(np.float64)
        .reshape(count, k)
    )
    return CompressedStream(
        window_len=d,
        rank=k,
        coeff_format="float32-le" if width == 4 else "float64-le",
        coefficients=coeffs,
    )
