import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from celldyn.core import (
    MaskFormatError,
    MaskVideo,
    VideoMetadata,
    read_mask_video,
    read_pgm,
    truncate_video,
    video_id_for,
    write_mask_video,
    write_pgm,
    write_pgm_directory,
)
from celldyn.simulator import SimParams, simulate


def test_all_zero_mskv(tmp_path):
    v = MaskVideo(np.zeros((2, 3, 3), np.uint8))
    write_mask_video(v, tmp_path / "z.mskv")
    back = read_mask_video(tmp_path / "z.mskv")
    assert back.shape == (2, 3, 3)
    assert back.kind == "binary"
    assert not back.frames.any()


def test_header_layout(tmp_path):
    v = MaskVideo(np.ones((2, 3, 4), np.uint8))
    write_mask_video(v, tmp_path / "a.mskv")
    raw = (tmp_path / "a.mskv").read_bytes()
    assert raw[:4] == b"MSKV"
    assert struct.unpack("<BBxxIII", raw[4:20]) == (1, 0, 2, 3, 4)
    assert len(raw) == 20 + 24


@given(arrays(np.uint8, st.tuples(st.integers(1, 4), st.integers(1, 6), st.integers(1, 6)), elements=st.integers(0, 1)))
@settings(max_examples=50, deadline=None)
def test_binary_round_trip(tmp_path_factory, frames):
    path = tmp_path_factory.mktemp("rt") / "v.mskv"
    v = MaskVideo(frames)
    write_mask_video(v, path)
    assert read_mask_video(path) == v


@pytest.mark.parametrize("max_label", [1, 255, 256, 300, 65535])
def test_labels_use_u16_code(tmp_path, max_label):
    frames = np.zeros((1, 2, 2), np.int64)
    frames[0, 0, 0] = max_label
    v = MaskVideo(frames, kind="labels")
    write_mask_video(v, tmp_path / "l.mskv")
    raw = (tmp_path / "l.mskv").read_bytes()
    assert raw[5] == 1
    assert len(raw) == 20 + 4 * 2
    back = read_mask_video(tmp_path / "l.mskv")
    assert back.kind == "labels" and int(back.frames.max()) == max_label


def test_label_overflow_rejected(tmp_path):
    v = MaskVideo(np.full((1, 1, 1), 70000, np.int64), kind="labels")
    with pytest.raises(ValueError):
        write_mask_video(v, tmp_path / "x.mskv")


def test_simulator_round_trip(tmp_path):
    v, _ = simulate(SimParams(height=64, width=64, frames=5, initial_count=4, seed=2))
    write_mask_video(v, tmp_path / "s.mskv")
    assert read_mask_video(tmp_path / "s.mskv") == v


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b"XXXX" + b[4:],
        lambda b: b[:4] + b"\x02" + b[5:],
        lambda b: b[:5] + b"\x07" + b[6:],
        lambda b: b[:6] + b"\x01" + b[7:],
        lambda b: b[:-1],
        lambda b: b + b"\0",
        lambda b: b[:10],
        lambda b: b[:-1] + b"\x02",
    ],
    ids=["magic", "version", "kind", "reserved", "short", "long", "header", "binary-value"],
)
def test_malformed_mskv(tmp_path, mutate):
    path = tmp_path / "m.mskv"
    write_mask_video(MaskVideo(np.ones((1, 2, 2), np.uint8)), path)
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(MaskFormatError):
        read_mask_video(path)


def test_missing_path(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_mask_video(tmp_path / "nope.mskv")


def test_pgm_directory(tmp_path):
    rng = np.random.default_rng(1)
    frames = (rng.random((5, 7, 9)) < 0.3).astype(np.uint8)
    d = tmp_path / "frames"
    write_pgm_directory(MaskVideo(frames), d)
    v = read_mask_video(d)
    assert v.kind == "binary" and np.array_equal(v.frames, frames)


def test_pgm_nonzero_is_foreground(tmp_path):
    d = tmp_path / "f"
    d.mkdir()
    img = np.array([[0, 17], [255, 0]], np.uint8)
    write_pgm(img, d / "a.pgm")
    assert np.array_equal(read_pgm(d / "a.pgm"), img)
    v = read_mask_video(d)
    assert np.array_equal(v.frames[0], [[0, 1], [1, 0]])


def test_pgm_order_is_lexicographic(tmp_path):
    d = tmp_path / "f"
    d.mkdir()
    write_pgm(np.ones((2, 2), np.uint8), d / "b.pgm")
    write_pgm(np.zeros((2, 2), np.uint8), d / "a.pgm")
    v = read_mask_video(d)
    assert not v.frames[0].any() and v.frames[1].all()


def test_pgm_dimension_mismatch(tmp_path):
    d = tmp_path / "f"
    d.mkdir()
    write_pgm(np.ones((2, 2), np.uint8), d / "a.pgm")
    write_pgm(np.ones((3, 2), np.uint8), d / "b.pgm")
    with pytest.raises(MaskFormatError):
        read_mask_video(d)


def test_pgm_deep_maxval_rejected(tmp_path):
    d = tmp_path / "f"
    d.mkdir()
    (d / "a.pgm").write_bytes(b"P5\n2 1\n65535\n" + b"\0" * 4)
    with pytest.raises(MaskFormatError):
        read_mask_video(d)


def test_full_resolution_pgm_directory(tmp_path):
    frames = np.zeros((81, 768, 1360), np.uint8)
    frames[:, 100:110, 200:210] = 1
    d = tmp_path / "full"
    write_pgm_directory(MaskVideo(frames), d)
    v = read_mask_video(d)
    assert v.shape == (81, 768, 1360)


@pytest.mark.parametrize("frames", [(0, 3, 3), (1, 0, 3)])
def test_empty_dimensions_rejected(frames):
    with pytest.raises(ValueError):
        MaskVideo(np.zeros(frames, np.uint8))


def test_validation():
    with pytest.raises(ValueError):
        MaskVideo(np.full((1, 2, 2), 2, np.uint8))
    with pytest.raises(ValueError):
        MaskVideo(np.full((1, 2, 2), -1, np.int32), kind="labels")
    with pytest.raises(ValueError):
        MaskVideo(np.zeros((2, 2), np.uint8))
    with pytest.raises(ValueError):
        MaskVideo(np.zeros((1, 2, 2)), kind="binary")
    with pytest.raises(ValueError):
        MaskVideo(np.zeros((1, 2, 2), np.uint8), kind="rgb")
    with pytest.raises(ValueError):
        VideoMetadata("")


def test_frames_are_read_only_and_copied():
    src = np.zeros((1, 2, 2), np.uint8)
    v = MaskVideo(src)
    src[0, 0, 0] = 1
    assert v.frames[0, 0, 0] == 0
    with pytest.raises(ValueError):
        v.frames[0, 0, 0] = 1


@pytest.mark.parametrize("t, k, expected", [(120, 81, 81), (40, 81, 40), (81, 81, 81)])
def test_truncate(t, k, expected):
    frames = np.zeros((t, 2, 2), np.uint8)
    frames[:, 0, 0] = np.arange(t) % 2
    v = MaskVideo(frames)
    out = truncate_video(v, k)
    assert out.n_frames == expected
    assert np.array_equal(out.frames, frames[:expected])
    assert truncate_video(out, k) == out
    if t <= k:
        assert out == v


def test_truncate_rejects_zero():
    with pytest.raises(ValueError):
        truncate_video(MaskVideo(np.zeros((2, 1, 1), np.uint8)), 0)


def test_video_id(tmp_path):
    assert video_id_for(tmp_path / "well_A01.mskv") == "well_A01"
    d = tmp_path / "well_B02"
    d.mkdir()
    assert video_id_for(d) == "well_B02"
