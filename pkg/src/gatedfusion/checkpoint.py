"""Versioned binary checkpoint container.

Layout: 4-byte magic ``GFCK``, little-endian u32 header length, a UTF-8 JSON
header, then one contiguous blob of little-endian reals. The header echoes the
model config, lists every array's name/shape in blob order, records the blob
dtype (``<f4`` or ``<f8``) and its SHA-256. Optimizer state rides along as
extra arrays so training can resume exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ChecksumError, ManifestError, UnsupportedVersionError
from .model import FusionModel, ModelConfig

MAGIC = b"GFCK"
FORMAT_VERSION = 1
_DTYPES = {"<f4", "<f8"}


@dataclass
class Checkpoint:
    config: dict
    arrays: dict[str, np.ndarray]
    meta: dict
    dtype: str


def save_checkpoint(
    path,
    config: dict,
    arrays: dict[str, np.ndarray],
    meta: dict | None = None,
    dtype: str = "<f8",
) -> None:
    if dtype not in _DTYPES:
        raise ManifestError(f"unsupported checkpoint dtype {dtype!r}")
    blob = b"".join(np.ascontiguousarray(a, dtype=dtype).tobytes() for a in arrays.values())
    header = {
        "format_version": FORMAT_VERSION,
        "dtype": dtype,
        "config": config,
        "arrays": [{"name": n, "rows": a.shape[0], "cols": a.shape[1]} for n, a in arrays.items()],
        "blob_length": len(blob),
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
        "meta": meta or {},
    }
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(head)))
        f.write(head)
        f.write(blob)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise ManifestError(f"{path}: not a checkpoint file (bad magic)")
    (head_len,) = struct.unpack("<I", raw[4:8])
    try:
        header = json.loads(raw[8 : 8 + head_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ManifestError(f"{path}: corrupt checkpoint header: {e}") from e
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported checkpoint version {version}")
    dtype = header.get("dtype")
    if dtype not in _DTYPES:
        raise ManifestError(f"{path}: unsupported dtype {dtype!r}")
    blob = raw[8 + head_len :]
    if len(blob) != header["blob_length"]:
        raise ChecksumError(f"{path}: blob length {len(blob)} != declared {header['blob_length']}")
    digest = hashlib.sha256(blob).hexdigest()
    if digest != header["blob_sha256"]:
        raise ChecksumError(f"{path}: blob checksum mismatch")
    itemsize = np.dtype(dtype).itemsize
    arrays = {}
    offset = 0
    for rec in header["arrays"]:
        count = rec["rows"] * rec["cols"]
        end = offset + count * itemsize
        if end > len(blob):
            raise ChecksumError(f"{path}: array {rec['name']!r} exceeds blob bounds")
        arr = np.frombuffer(blob[offset:end], dtype=dtype).astype(np.float64)
        arrays[rec["name"]] = arr.reshape(rec["rows"], rec["cols"])
        offset = end
    return Checkpoint(header["config"], arrays, header.get("meta", {}), dtype)


def save_model(model: FusionModel, path, optimizer_state: dict[str, np.ndarray] | None = None,
               meta: dict | None = None, dtype: str = "<f8") -> None:
    arrays = {p.name: p.data for p in model.parameters()}
    if optimizer_state:
        arrays.update({f"opt.{k}": v for k, v in optimizer_state.items()})
    save_checkpoint(path, model.cfg.to_dict(), arrays, meta, dtype)


def load_model(path) -> tuple[FusionModel, Checkpoint]:
    ckpt = load_checkpoint(path)
    model = FusionModel(ModelConfig(**ckpt.config))
    for p in model.parameters():
        if p.name not in ckpt.arrays:
            raise ManifestError(f"{path}: checkpoint missing parameter {p.name!r}")
        stored = ckpt.arrays[p.name]
        if stored.shape != p.data.shape:
            raise ManifestError(
                f"{path}: parameter {p.name!r} shape {stored.shape} != expected {p.data.shape}"
            )
        p.data[...] = stored
    return model, ckpt
