"""Mask-video container, validation and on-disk formats.

Two ingestion paths are supported:

* MSKV, a small little-endian binary container written by this package::

      "MSKV"  version:u8  kind:u8  reserved:2 bytes  T:u32 H:u32 W:u32  pixels...

  ``kind`` is 0 for binary masks stored as u8 and 1 for integer labels
  stored as u16. Pixels follow row-major within a frame, frame-major overall.

* A directory of binary PGM (P5) images, one per frame, sorted by filename.
  Any nonzero pixel is foreground.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np

MSKV_MAGIC = b"MSKV"
MSKV_VERSION = 1
_HEADER = struct.Struct("<4sBBxxIII")
_KIND_CODES = {"binary": 0, "labels": 1}
_CODE_DTYPES = {0: np.dtype("<u1"), 1: np.dtype("<u2")}

PixelKind = Literal["binary", "labels"]


class MaskFormatError(ValueError):
    """Raised when a mask file or directory cannot be decoded."""


@dataclass(frozen=True)
class Centroid:
    y: float
    x: float


@dataclass(frozen=True)
class VideoMetadata:
    source_id: str
    phenotype_scores: Optional[object] = None
    frame_count_original: int = 0

    def __post_init__(self):
        if not self.source_id:
            raise ValueError("source_id must be nonempty")


@dataclass(frozen=True, eq=False)
class MaskVideo:
    """A T x H x W stack of nucleus masks.

    ``frames`` is stored read-only. Binary videos hold 0/1 values as
    ``uint8``; labeled videos hold nonnegative integer labels with 0 as
    background.
    """

    frames: np.ndarray
    kind: PixelKind = "binary"
    frame_interval: float = 30.0  # minutes

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 3:
            raise ValueError(f"frames must be T x H x W, got shape {frames.shape}")
        if min(frames.shape) < 1:
            raise ValueError(f"every dimension must be >= 1, got shape {frames.shape}")
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown pixel kind {self.kind!r}")
        if frames.dtype.kind not in "biu":
            raise ValueError(f"mask pixels must be integer or bool, got {frames.dtype}")
        if self.kind == "binary":
            if frames.dtype != np.uint8:
                if frames.size and (frames.min() < 0 or frames.max() > 1):
                    raise ValueError("binary masks must only contain 0 and 1")
                frames = frames.astype(np.uint8)
            elif frames.max() > 1:
                raise ValueError("binary masks must only contain 0 and 1")
        else:
            if frames.dtype.kind == "i" and frames.min() < 0:
                raise ValueError("labels must be nonnegative")
            if frames.dtype.kind == "b":
                frames = frames.astype(np.uint8)
        if frames.flags.writeable:
            frames = frames.copy() if frames is self.frames else frames
            frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.frames.shape  # type: ignore[return-value]

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def __len__(self) -> int:
        return self.n_frames

    def __eq__(self, other) -> bool:
        if not isinstance(other, MaskVideo):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.frames.shape == other.frames.shape
            and bool(np.array_equal(self.frames, other.frames))
        )

    __hash__ = None  # type: ignore[assignment]


def truncate_video(video: MaskVideo, max_frames: int) -> MaskVideo:
    """Keep at most the first ``max_frames`` frames."""
    if max_frames < 1:
        raise ValueError("max_frames must be >= 1")
    if video.n_frames <= max_frames:
        return video
    return MaskVideo(video.frames[:max_frames], kind=video.kind, frame_interval=video.frame_interval)


# -------------------------------------------------------------------- MSKV


def write_mask_video(video: MaskVideo, path) -> None:
    """Write ``video`` as an MSKV file that :func:`read_mask_video` inverts bit-exactly."""
    if not isinstance(video, MaskVideo):
        raise TypeError("expected a MaskVideo")
    code = _KIND_CODES[video.kind]
    dtype = _CODE_DTYPES[code]
    frames = video.frames
    if code == 1 and frames.size and int(frames.max()) > np.iinfo(np.uint16).max:
        raise ValueError("labels above 65535 cannot be stored in MSKV")
    t, h, w = frames.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MSKV_MAGIC, MSKV_VERSION, code, t, h, w))
        fh.write(np.ascontiguousarray(frames, dtype=dtype).tobytes())


def _read_mskv(path: Path, frame_interval: float) -> MaskVideo:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise MaskFormatError(f"{path}: truncated header")
        magic, version, code, t, h, w = _HEADER.unpack(head)
        if magic != MSKV_MAGIC:
            raise MaskFormatError(f"{path}: bad magic {magic!r}")
        if version != MSKV_VERSION:
            raise MaskFormatError(f"{path}: unsupported MSKV version {version}")
        if head[6:8] != b"\x00\x00":
            raise MaskFormatError(f"{path}: reserved header bytes are not zero")
        if code not in _CODE_DTYPES:
            raise MaskFormatError(f"{path}: unsupported pixel-kind code {code}")
        if t < 1 or h < 1 or w < 1:
            raise MaskFormatError(f"{path}: empty dimensions T={t} H={h} W={w}")
        dtype = _CODE_DTYPES[code]
        expected = t * h * w * dtype.itemsize
        payload = fh.read()
    if len(payload) != expected:
        raise MaskFormatError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    frames = np.frombuffer(payload, dtype=dtype).reshape(t, h, w)
    if not np.little_endian:
        frames = frames.astype(dtype.newbyteorder("="))
    kind = "binary" if code == 0 else "labels"
    if kind == "binary" and frames.max() > 1:
        raise MaskFormatError(f"{path}: binary MSKV holds values other than 0/1")
    # frombuffer views are already read-only
    return MaskVideo(frames, kind=kind, frame_interval=frame_interval)


# --------------------------------------------------------------------- PGM


def _pgm_tokens(data: bytes):
    """Yield (token, end offset) pairs from a PGM header, skipping comments."""
    pos = 0
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
                pos += 1
            yield data[start:pos], pos


def read_pgm(path) -> np.ndarray:
    """Decode one binary (P5) PGM image with maxval <= 255."""
    data = Path(path).read_bytes()
    tokens = _pgm_tokens(data)
    try:
        magic, _ = next(tokens)
        if magic != b"P5":
            raise MaskFormatError(f"{path}: not a binary PGM (magic {magic!r})")
        width, _ = next(tokens)
        height, _ = next(tokens)
        maxval, end = next(tokens)
        w, h, maxv = int(width), int(height), int(maxval)
    except (StopIteration, ValueError) as exc:
        raise MaskFormatError(f"{path}: malformed PGM header") from exc
    if maxv < 1 or maxv > 65535:
        raise MaskFormatError(f"{path}: invalid maxval {maxv}")
    if maxv > 255:
        raise MaskFormatError(f"{path}: unsupported pixel depth (maxval {maxv} > 255)")
    if w < 1 or h < 1:
        raise MaskFormatError(f"{path}: empty image {w}x{h}")
    # exactly one whitespace byte separates the header from the raster
    raster = data[end + 1 : end + 1 + w * h]
    if len(raster) != w * h:
        raise MaskFormatError(f"{path}: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w)


def write_pgm(frame: np.ndarray, path, maxval: int = 255) -> None:
    frame = np.asarray(frame)
    h, w = frame.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
        fh.write(np.ascontiguousarray(frame, dtype=np.uint8).tobytes())


def write_pgm_directory(video: MaskVideo, directory, prefix: str = "frame") -> None:
    """Export each frame as an 8-bit PGM; foreground is written as 255."""
    os.makedirs(directory, exist_ok=True)
    digits = max(4, len(str(video.n_frames - 1)))
    for t, frame in enumerate(video.frames):
        out = np.where(frame > 0, 255, 0).astype(np.uint8)
        write_pgm(out, Path(directory) / f"{prefix}{t:0{digits}d}.pgm")


def _read_pgm_directory(path: Path, frame_interval: float) -> MaskVideo:
    files = sorted(p for p in path.iterdir() if p.is_file() and p.suffix.lower() == ".pgm")
    if not files:
        raise MaskFormatError(f"{path}: no .pgm frames found")
    frames = []
    for f in files:
        img = read_pgm(f)
        if frames and img.shape != frames[0].shape:
            raise MaskFormatError(
                f"{f}: frame is {img.shape[0]}x{img.shape[1]}, "
                f"expected {frames[0].shape[0]}x{frames[0].shape[1]}"
            )
        frames.append(img != 0)
    stack = np.stack(frames).view(np.uint8)
    return MaskVideo(stack, kind="binary", frame_interval=frame_interval)


def read_mask_video(path, frame_interval: float = 30.0) -> MaskVideo:
    """Load an MSKV file or a directory of PGM frames."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file or directory: {path}")
    if path.is_dir():
        return _read_pgm_directory(path, frame_interval)
    return _read_mskv(path, frame_interval)


def video_id_for(path) -> str:
    """Identifier used to key per-video rows: filename stem or directory name."""
    path = Path(path)
    return path.name if path.is_dir() else path.stem
