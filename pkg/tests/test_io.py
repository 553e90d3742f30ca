import json
import math
import struct

import numpy as np
import pytest

from hpca.codec import BasisModel
from hpca.errors import (
    CorruptionError,
    FormatError,
    ParameterError,
    ParseError,
    ShapeError,
)
from hpca.io import (
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

from helpers import random_orthonormal


F64 = TraceMeta(sample_rate_hz=100.0, sample_format="float64-le")
I32 = TraceMeta(sample_rate_hz=100.0, sample_format="int32-le")
CSV = TraceMeta(sample_rate_hz=100.0, sample_format="csv")


def make_model(rng, d, k, source="hpca"):
    return BasisModel(
        window_len=d,
        rank=k,
        basis=random_orthonormal(rng, d, k),
        eigenvalues=np.sort(rng.uniform(0.1, 5.0, k))[::-1],
        trained_blocks=7,
        source=source,
    )


def test_trace_meta_validation():
    with pytest.raises(ParameterError):
        TraceMeta(sample_rate_hz=0.0, sample_format="csv")
    with pytest.raises(ParameterError):
        TraceMeta(sample_rate_hz=100.0, sample_format="int16-le")
    with pytest.raises(ParameterError):
        TraceMeta(sample_rate_hz=100.0, sample_format="csv", axis="w")


def test_synthetic_spec_validation():
    good = dict(seed=1, duration_s=2.0, sample_rate_hz=100.0, modes=(), noise_std=0.0)
    SyntheticSpec(**good)
    with pytest.raises(ParameterError):
        SyntheticSpec(**{**good, "duration_s": 0.0})
    with pytest.raises(ParameterError):
        SyntheticSpec(**{**good, "noise_std": -1.0})
    with pytest.raises(ParameterError, match="frequency"):
        SyntheticSpec(**{**good, "modes": (Mode(frequency_hz=50.0, amplitude=1.0),)})
    with pytest.raises(ParameterError, match="damping"):
        SyntheticSpec(
            **{**good, "modes": (Mode(frequency_hz=5.0, amplitude=1.0, damping=-0.1),)}
        )
    with pytest.raises(ParameterError, match="onset_damping"):
        SyntheticSpec(
            **{
                **good,
                "modes": (
                    Mode(frequency_hz=5.0, amplitude=1.0, onset_amplitude=2.0, onset_damping=-1.0),
                ),
            }
        )
    with pytest.raises(ParameterError, match="onset_amplitude"):
        SyntheticSpec(
            **{
                **good,
                "modes": (Mode(frequency_hz=5.0, amplitude=1.0, onset_amplitude=math.inf),),
            }
        )


def test_load_synthetic_spec(tmp_path):
    doc = {
        "seed": 3,
        "duration_s": 10.0,
        "sample_rate_hz": 100.0,
        "noise_std": 0.05,
        "modes": [
            {"frequency_hz": 1.5, "amplitude": 2.0, "damping": 0.001},
            {"frequency_hz": 7.25, "amplitude": 0.5, "onset_amplitude": 1.5, "onset_damping": 0.2},
        ],
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    spec = load_synthetic_spec(path)
    assert spec.seed == 3
    assert spec.modes[0].damping == 0.001
    assert spec.modes[0].onset_amplitude == 0.0
    assert spec.modes[1].damping == 0.0
    assert spec.modes[1].onset_amplitude == 1.5
    assert spec.modes[1].onset_damping == 0.2

    path.write_text(json.dumps({"seed": 1}))
    with pytest.raises(ParseError, match="missing field"):
        load_synthetic_spec(path)
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_synthetic_spec(path)


def test_generate_silence():
    spec = SyntheticSpec(seed=0, duration_s=1.0, sample_rate_hz=50.0, modes=(), noise_std=0.0)
    out = generate_synthetic(spec)
    assert out.shape == (50,)
    np.testing.assert_allclose(out, 0.0)


def test_generate_pure_sinusoid_rms():
    spec = SyntheticSpec(
        seed=5,
        duration_s=200.0,
        sample_rate_hz=100.0,
        modes=(Mode(frequency_hz=3.7, amplitude=1.0, damping=0.0),),
        noise_std=0.0,
    )
    out = generate_synthetic(spec)
    rms = math.sqrt(float(np.mean(out**2)))
    assert rms == pytest.approx(1.0 / math.sqrt(2.0), rel=0.01)


def test_generate_onset_envelope_superposes():
    base = dict(seed=4, duration_s=30.0, sample_rate_hz=100.0, noise_std=0.0)
    combined = generate_synthetic(
        SyntheticSpec(
            modes=(
                Mode(
                    frequency_hz=2.5,
                    amplitude=0.4,
                    damping=0.003,
                    onset_amplitude=1.8,
                    onset_damping=0.25,
                ),
            ),
            **base,
        )
    )
    slow = generate_synthetic(
        SyntheticSpec(modes=(Mode(frequency_hz=2.5, amplitude=0.4, damping=0.003),), **base)
    )
    fast = generate_synthetic(
        SyntheticSpec(modes=(Mode(frequency_hz=2.5, amplitude=1.8, damping=0.25),), **base)
    )
    # Same seed means the same phase draw, so the two envelope terms add exactly.
    np.testing.assert_allclose(combined, slow + fast, atol=1e-12)
    # The onset term dominates at excitation and is gone within seconds.
    onset_part = np.abs(combined - slow)
    assert float(np.max(onset_part[:100])) > 1.0
    assert float(np.max(onset_part[2000:])) < 0.02


def test_generate_deterministic():
    spec = SyntheticSpec(
        seed=9,
        duration_s=5.0,
        sample_rate_hz=100.0,
        modes=(Mode(frequency_hz=2.0, amplitude=1.0, damping=0.01),),
        noise_std=0.3,
    )
    a = generate_synthetic(spec)
    b = generate_synthetic(spec)
    assert np.array_equal(a, b)
    assert np.all(np.isfinite(a))
    c = generate_synthetic(
        SyntheticSpec(
            seed=10,
            duration_s=5.0,
            sample_rate_hz=100.0,
            modes=spec.modes,
            noise_std=0.3,
        )
    )
    assert not np.array_equal(a, c)


def test_read_trace_int32(tmp_path):
    path = tmp_path / "t.bin"
    path.write_bytes(struct.pack("<ii", 1, -1))
    out = read_trace(path, I32)
    assert out.dtype == np.float64
    np.testing.assert_allclose(out, [1.0, -1.0])


def test_read_trace_empty(tmp_path):
    path = tmp_path / "t.bin"
    path.write_bytes(b"")
    for meta in (I32, F64, CSV):
        assert read_trace(path, meta).shape == (0,)


def test_read_trace_truncated(tmp_path):
    path = tmp_path / "t.bin"
    path.write_bytes(b"\x01\x00\x00\x00\x02\x00")
    with pytest.raises(ParseError, match="truncated") as exc:
        read_trace(path, I32)
    assert exc.value.byte == 4


def test_float64_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(80)
    samples = rng.standard_normal(100_000)
    path = tmp_path / "t.f64"
    write_trace(samples, path, F64)
    back = read_trace(path, F64)
    assert np.array_equal(samples, back)


def test_int32_roundtrip_and_validation(tmp_path):
    path = tmp_path / "t.i32"
    write_trace([1.0, -7.0, 2**31 - 1], path, I32)
    np.testing.assert_allclose(read_trace(path, I32), [1.0, -7.0, 2**31 - 1])
    with pytest.raises(ParameterError, match="integral"):
        write_trace([1.5], path, I32)
    with pytest.raises(ParameterError, match="range"):
        write_trace([2.0**31], path, I32)


def test_csv_roundtrip_comments_and_errors(tmp_path):
    rng = np.random.default_rng(81)
    samples = rng.standard_normal(200)
    path = tmp_path / "t.csv"
    write_trace(samples, path, CSV)
    assert np.array_equal(read_trace(path, CSV), samples)

    path.write_text("# header\n1.5\n\n-2.0\n")
    np.testing.assert_allclose(read_trace(path, CSV), [1.5, -2.0])

    path.write_text("# header\n1.5\nbogus\n")
    with pytest.raises(ParseError, match="bogus") as exc:
        read_trace(path, CSV)
    assert exc.value.line == 3
    assert exc.value.byte == len("# header\n1.5\n")


def test_window_stream_counts():
    assert window_stream(np.arange(10.0), 5).shape == (2, 5)
    assert window_stream(np.arange(9.0), 5).shape == (1, 5)
    assert window_stream(np.arange(3.0), 5).shape == (0, 5)
    with pytest.raises(ParameterError):
        window_stream(np.arange(3.0), 0)


def test_window_stream_reassembly():
    rng = np.random.default_rng(82)
    samples = rng.standard_normal(103)
    windows = window_stream(samples, 10)
    assert np.array_equal(windows.reshape(-1), samples[:100])


def test_model_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(83)
    model = make_model(rng, 12, 4)
    path = tmp_path / "m.hpca"
    write_model(model, path)
    back = read_model(path)
    assert np.array_equal(back.basis, model.basis)
    assert np.array_equal(back.eigenvalues, model.eigenvalues)
    assert back.window_len == 12 and back.rank == 4
    assert back.trained_blocks == 7
    assert back.source == "hpca"


def test_model_file_size_arithmetic(tmp_path):
    scalar = BasisModel(
        window_len=1,
        rank=1,
        basis=np.array([[1.0]]),
        eigenvalues=np.array([2.0]),
        trained_blocks=1,
        source="hpca",
    )
    path = tmp_path / "m.hpca"
    write_model(scalar, path)
    src_len = len("hpca")
    # fixed header + tag + one lambda + one basis entry + trailing CRC32
    assert path.stat().st_size == 4 + 2 + 4 + 4 + 8 + (1 + src_len) + 8 + 8 + 4


def test_model_fault_injection(tmp_path):
    rng = np.random.default_rng(84)
    path = tmp_path / "m.hpca"
    write_model(make_model(rng, 6, 2), path)
    raw = bytearray(path.read_bytes())
    flip = len(raw) // 2
    raw[flip] ^= 0x40
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptionError, match="CRC"):
        read_model(path)


def test_model_bad_magic_and_version(tmp_path):
    rng = np.random.default_rng(85)
    path = tmp_path / "m.hpca"
    write_model(make_model(rng, 6, 2), path)
    raw = bytearray(path.read_bytes())
    bad = tmp_path / "bad.hpca"

    bad.write_bytes(b"NOPE" + bytes(raw[4:]))
    with pytest.raises(FormatError, match="magic"):
        read_model(bad)

    v2 = bytearray(raw)
    struct.pack_into("<H", v2, 4, 2)
    bad.write_bytes(bytes(v2))
    with pytest.raises(FormatError, match="version"):
        read_model(bad)

    bad.write_bytes(bytes(raw[: len(raw) - 9]))
    with pytest.raises(CorruptionError):
        read_model(bad)


def test_stream_header_only(tmp_path):
    rng = np.random.default_rng(86)
    model = make_model(rng, 6, 3)
    path = tmp_path / "s.hpcz"
    write_compressed_stream(model, np.zeros((0, 3)), path)
    assert path.stat().st_size == struct.calcsize("<4sHIIBQ") + 4
    back = read_compressed_stream(path)
    assert back.coefficients.shape == (0, 3)
    assert back.window_len == 6 and back.rank == 3


def test_stream_f64_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(87)
    model = make_model(rng, 8, 4)
    coeffs = rng.standard_normal((25, 4))
    path = tmp_path / "s.hpcz"
    write_compressed_stream(model, coeffs, path, coeff_format="float64-le")
    back = read_compressed_stream(path)
    assert back.coeff_format == "float64-le"
    assert np.array_equal(back.coefficients, coeffs)


def test_stream_f32_narrowing_bound(tmp_path):
    rng = np.random.default_rng(88)
    model = make_model(rng, 8, 4)
    coeffs = rng.standard_normal((50, 4)) * 100.0
    path = tmp_path / "s.hpcz"
    write_compressed_stream(model, coeffs, path, coeff_format="float32-le")
    back = read_compressed_stream(path)
    rel = np.abs(back.coefficients - coeffs) / np.abs(coeffs)
    assert np.max(rel) <= 2.0**-23


def test_stream_size_matches_compression_ratio(tmp_path):
    # d=500, k=50 at float32 coefficients vs int32 raw samples: per-window
    # payload drops from 2000 bytes to 200 bytes, a 10x reduction
    rng = np.random.default_rng(89)
    d, k, n = 500, 50, 20
    model = make_model(rng, d, k)
    coeffs = rng.standard_normal((n, k))
    spath = tmp_path / "s.hpcz"
    write_compressed_stream(model, coeffs, spath, coeff_format="float32-le")
    header = struct.calcsize("<4sHIIBQ")
    stream_payload = spath.stat().st_size - header - 4
    raw_payload = n * d * 4
    assert stream_payload == n * k * 4
    assert raw_payload / stream_payload == 10.0


def test_stream_rejects_bad_inputs(tmp_path):
    rng = np.random.default_rng(90)
    model = make_model(rng, 6, 3)
    path = tmp_path / "s.hpcz"
    with pytest.raises(ParameterError):
        write_compressed_stream(model, np.zeros((2, 3)), path, coeff_format="f16")
    with pytest.raises(ShapeError):
        write_compressed_stream(model, np.zeros((2, 4)), path)
    with pytest.raises(ShapeError):
        write_compressed_stream(model, np.zeros(3), path)


def test_stream_fault_injection(tmp_path):
    rng = np.random.default_rng(91)
    model = make_model(rng, 6, 3)
    path = tmp_path / "s.hpcz"
    write_compressed_stream(model, rng.standard_normal((4, 3)), path)
    raw = bytearray(path.read_bytes())
    raw[30] ^= 0x01
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptionError):
        read_compressed_stream(path)


def test_model_and_stream_magics_are_distinct(tmp_path):
    rng = np.random.default_rng(92)
    model = make_model(rng, 6, 3)
    mpath = tmp_path / "m.hpca"
    spath = tmp_path / "s.hpcz"
    write_model(model, mpath)
    write_compressed_stream(model, rng.standard_normal((2, 3)), spath)
    with pytest.raises(FormatError):
        read_model(spath)
    with pytest.raises(FormatError):
        read_compressed_stream(mpath)
