"""EMBF v1 writer.

Independent implementation of the dataset container consumed downstream:

    magic "EMBF" | u32 version=1 | u32 n | u32 dim | u32 json_len
    | metadata JSON {name, classes[], ids[], labels[], ...extras}
    | n*dim float32 vectors row-major | u64 FNV-1a checksum

Little-endian throughout; canonical JSON so identical inputs give identical
bytes; temp-file-then-rename writes.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

_MAGIC = b"EMBF"
_VERSION = 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _U64
    return h


def write_embf(
    path: str,
    name: str,
    classes: list[str],
    ids: list[str],
    labels: list[int],
    vectors: np.ndarray,
    extra: dict | None = None,
) -> None:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        raise ValueError(f"vectors must be 2-d, got shape {vectors.shape}")
    n, dim = vectors.shape
    if not (len(ids) == len(labels) == n):
        raise ValueError("ids, labels, and vectors disagree in length")
    if len(set(ids)) != n:
        raise ValueError("instance ids must be unique")
    if not np.isfinite(vectors).all():
        raise ValueError("vectors must be finite")
    if any(not (0 <= l < len(classes)) for l in labels):
        raise ValueError("labels must index into classes")

    meta = {"name": name, "classes": list(classes), "ids": list(ids), "labels": [int(v) for v in labels]}
    for k, v in (extra or {}).items():
        if k not in meta:
            meta[k] = v
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join(
        (
            _MAGIC,
            struct.pack("<IIII", _VERSION, n, dim, len(meta_bytes)),
            meta_bytes,
            vectors.tobytes(),
        )
    )
    blob = body + struct.pack("<Q", fnv1a64(body))
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)
