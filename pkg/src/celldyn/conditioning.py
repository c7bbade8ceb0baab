"""Phenotype-embedding MLP (4 -> 256 -> 512 -> 4096) and token prepending.

Weights live in PEMB files, all little-endian::

    "PEMB" version:u8 dtype:u8(0=f32) reserved:2 bytes count:u32
    count x { name:4 bytes ascii, ndim:u32, dim0:u32, dim1:u32 }
    float32 data of each tensor in record order, row-major
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

MODEL_DIM = 4096
PHENOTYPE_DIM = 4
LAYER_SIZES = (PHENOTYPE_DIM, 256, 512, MODEL_DIM)
TENSOR_SHAPES = {
    "W1": (256, 4),
    "b1": (256,),
    "W2": (512, 256),
    "b2": (512,),
    "W3": (4096, 512),
    "b3": (4096,),
}

PEMB_MAGIC = b"PEMB"
PEMB_VERSION = 1
_HEAD = struct.Struct("<4sBBxxI")
_RECORD = struct.Struct("<4sIII")


class WeightsFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MlpWeights:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        for name, shape in TENSOR_SHAPES.items():
            arr = np.asarray(getattr(self, name), dtype=np.float32)
            if arr.shape != shape:
                raise WeightsFormatError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise WeightsFormatError(f"{name} holds non-finite values")
            arr = arr.copy() if arr is getattr(self, name) else arr
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TENSOR_SHAPES}

    def __eq__(self, other) -> bool:
        if not isinstance(other, MlpWeights):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.tensors().values(), other.tensors().values()))

    __hash__ = None  # type: ignore[assignment]


def zero_weights() -> MlpWeights:
    return MlpWeights(**{name: np.zeros(shape, np.float32) for name, shape in TENSOR_SHAPES.items()})


def random_weights(seed: int) -> MlpWeights:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases, drawn in W1, b1, ..., b3 order."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for k, (fan_in, fan_out) in enumerate(zip(LAYER_SIZES[:-1], LAYER_SIZES[1:]), start=1):
        bound = 1.0 / np.sqrt(fan_in)
        tensors[f"W{k}"] = rng.uniform(-bound, bound, (fan_out, fan_in)).astype(np.float32)
        tensors[f"b{k}"] = rng.uniform(-bound, bound, fan_out).astype(np.float32)
    return MlpWeights(**tensors)


def gelu(x):
    """Exact GELU, x * Phi(x)."""
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def embed_phenotype(p, weights: MlpWeights) -> np.ndarray:
    """Map normalized phenotype vectors to model-dimension embeddings.

    Args:
        p: shape (4,) or (N, 4), expected inside [0, 1].
        weights: MLP parameters.

    Returns:
        float64 array of shape (4096,) or (N, 4096).
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1:] != (PHENOTYPE_DIM,) or p.ndim > 2:
        raise ValueError(f"phenotype input must have shape (4,) or (N, 4), got {p.shape}")
    if np.any(p < 0) or np.any(p > 1):
        warnings.warn("phenotype vector has entries outside [0, 1]", stacklevel=2)
    w = {k: v.astype(np.float64) for k, v in weights.tensors().items()}
    h1 = gelu(p @ w["W1"].T + w["b1"])
    h2 = gelu(h1 @ w["W2"].T + w["b2"])
    return h2 @ w["W3"].T + w["b3"]


def prepend_token(text_tokens, p_embed) -> np.ndarray:
    """Stack ``p_embed`` as row 0 on top of an L x 4096 token matrix."""
    text_tokens = np.asarray(text_tokens)
    p_embed = np.asarray(p_embed)
    if text_tokens.ndim != 2 or text_tokens.shape[1] != MODEL_DIM:
        raise ValueError(f"text tokens must be L x {MODEL_DIM}, got {text_tokens.shape}")
    if p_embed.shape != (MODEL_DIM,):
        raise ValueError(f"phenotype embedding must have length {MODEL_DIM}, got {p_embed.shape}")
    dtype = np.result_type(text_tokens.dtype, p_embed.dtype)
    out = np.empty((text_tokens.shape[0] + 1, MODEL_DIM), dtype=dtype)
    out[0] = p_embed
    out[1:] = text_tokens
    return out


def save_weights(weights: MlpWeights, path) -> None:
    tensors = weights.tensors()
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(PEMB_MAGIC, PEMB_VERSION, 0, len(tensors)))
        for name, arr in tensors.items():
            dims = arr.shape + (0,) * (2 - arr.ndim)
            fh.write(_RECORD.pack(name.encode("ascii"), arr.ndim, *dims))
        for arr in tensors.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_weights(path) -> MlpWeights:
    data = Path(path).read_bytes()
    if len(data) < _HEAD.size:
        raise WeightsFormatError(f"{path}: truncated header")
    magic, version, dtype_code, count = _HEAD.unpack_from(data)
    if magic != PEMB_MAGIC:
        raise WeightsFormatError(f"{path}: bad magic {magic!r}")
    if version != PEMB_VERSION or dtype_code != 0:
        raise WeightsFormatError(f"{path}: unsupported version {version} / dtype {dtype_code}")
    if count != len(TENSOR_SHAPES):
        raise WeightsFormatError(f"{path}: expected {len(TENSOR_SHAPES)} tensors, found {count}")
    offset = _HEAD.size
    records = []
    for _ in range(count):
        if len(data) < offset + _RECORD.size:
            raise WeightsFormatError(f"{path}: truncated tensor table")
        raw, ndim, d0, d1 = _RECORD.unpack_from(data, offset)
        offset += _RECORD.size
        name = raw.rstrip(b"\0").decode("ascii", errors="replace")
        if name not in TENSOR_SHAPES:
            raise WeightsFormatError(f"{path}: unknown tensor {name!r}")
        if ndim not in (1, 2):
            raise WeightsFormatError(f"{path}: tensor {name} has ndim {ndim}")
        shape = (d0, d1)[:ndim]
        if shape != TENSOR_SHAPES[name]:
            raise WeightsFormatError(f"{path}: tensor {name} has shape {shape}, expected {TENSOR_SHAPES[name]}")
        records.append((name, shape))
    tensors = {}
    for name, shape in records:
        nbytes = int(np.prod(shape)) * 4
        if len(data) < offset + nbytes:
            raise WeightsFormatError(f"{path}: truncated data for tensor {name}")
        tensors[name] = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=offset).reshape(shape)
        offset += nbytes
    if offset != len(data):
        raise WeightsFormatError(f"{path}: {len(data) - offset} trailing bytes")
    if set(tensors) != set(TENSOR_SHAPES):
        raise WeightsFormatError(f"{path}: duplicate or missing tensors")
    return MlpWeights(**tensors)


def write_embeddings(embeddings: np.ndarray, path, video_ids=None) -> Path:
    """Raw little-endian float32 N x 4096 matrix plus a ``.json`` shape sidecar."""
    emb = np.atleast_2d(np.asarray(embeddings))
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(emb, dtype="<f4").tobytes())
    sidecar = {
        "shape": list(emb.shape),
        "dtype": "float32",
        "byte_order": "little",
        "video_ids": list(video_ids) if video_ids is not None else None,
    }
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(sidecar, indent=2) + "\n")
    return side


def read_embeddings(path) -> np.ndarray:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    return np.fromfile(path, dtype="<f4").reshape(meta["shape"])
