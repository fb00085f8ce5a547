"""Dataset and model persistence.

EMBF v1 (little-endian), one labeled embedding dataset per file:

    magic "EMBF" | u32 version=1 | u32 n | u32 dim | u32 json_len
    | json_len bytes UTF-8 metadata {name, classes[], ids[], labels[], ...}
    | n*dim float32 vectors, row-major
    | u64 FNV-1a checksum over all preceding bytes

Model files use the same envelope with magic "EMBM": a JSON header holding
every config scalar, Beta states, and a tensor manifest, followed by the
float64 tensor payloads, then the checksum. Vectors are stored float32
(encoder output precision); all computation upstream runs in float64.

Writers write to a temp file and atomically rename.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .bayes_dropout import BetaState, DropoutHead, LayerSpec
from .errors import DataError
from .kernels import KernelConfig, rff_frequencies
from .rngstream import fnv1a64
from .training import TrainConfig

_DATA_MAGIC = b"EMBF"
_MODEL_MAGIC = b"EMBM"
FORMAT_VERSION = 1


@dataclass
class EmbeddingDataset:
    """Labeled fixed-dimension vectors; the universal model input."""

    name: str
    classes: list[str]
    ids: list[str]
    labels: np.ndarray
    vectors: np.ndarray
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise DataError(f"vectors must be 2-d, got shape {self.vectors.shape}")
        if not (len(self.ids) == len(self.labels) == self.vectors.shape[0]):
            raise DataError("ids, labels, and vectors must agree in length")

    def validate(self) -> None:
        if self.vectors.shape[0] and self.vectors.shape[1] < 1:
            raise DataError("embedding dimension must be >= 1")
        seen: dict[str, int] = {}
        for i, iid in enumerate(self.ids):
            if iid in seen:
                raise DataError(f"duplicate instance id {iid!r}")
            seen[iid] = i
        for i, iid in enumerate(self.ids):
            if not np.isfinite(self.vectors[i]).all():
                raise DataError(f"non-finite vector for instance id {iid!r}")
        k = len(self.classes)
        bad = np.flatnonzero((self.labels < 0) | (self.labels >= k))
        if bad.size:
            raise DataError(f"label {int(self.labels[bad[0]])} of instance {self.ids[int(bad[0])]!r} outside [0, {k})")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def subset(self, indices: np.ndarray, name_suffix: str = "") -> "EmbeddingDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return EmbeddingDataset(
            name=self.name + name_suffix,
            classes=list(self.classes),
            ids=[self.ids[i] for i in idx],
            labels=self.labels[idx],
            vectors=self.vectors[idx],
            extra=dict(self.extra),
        )


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _atomic_write(path: str, payload: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def write_embf(dataset: EmbeddingDataset, path: str) -> None:
    """Serialize a dataset; identical datasets produce byte-identical files."""
    dataset.validate()
    meta = {
        "name": dataset.name,
        "classes": list(dataset.classes),
        "ids": list(dataset.ids),
        "labels": [int(v) for v in dataset.labels],
    }
    for k, v in dataset.extra.items():
        if k not in meta:
            meta[k] = v
    meta_bytes = _canonical_json(meta)
    n, dim = dataset.vectors.shape
    body = b"".join(
        (
            _DATA_MAGIC,
            struct.pack("<IIII", FORMAT_VERSION, n, dim, len(meta_bytes)),
            meta_bytes,
            np.ascontiguousarray(dataset.vectors, dtype="<f4").tobytes(),
        )
    )
    _atomic_write(path, body + struct.pack("<Q", fnv1a64(body)))


def read_embf(path: str) -> EmbeddingDataset:
    """Parse and validate an EMBF v1 file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != _DATA_MAGIC:
        raise DataError(f"bad magic at offset 0 in {path!r}: expected EMBF")
    if len(blob) < 20:
        raise DataError(f"truncated header at offset {len(blob)} in {path!r}")
    version, n, dim, json_len = struct.unpack_from("<IIII", blob, 4)
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported EMBF version {version} at offset 4 (reader supports {FORMAT_VERSION})")
    payload_len = 20 + json_len + n * dim * 4
    if len(blob) != payload_len + 8:
        raise DataError(f"truncated payload: file has {len(blob)} bytes, expected {payload_len + 8}")
    (stored_sum,) = struct.unpack_from("<Q", blob, payload_len)
    if fnv1a64(blob[:payload_len]) != stored_sum:
        raise DataError(f"checksum mismatch at offset {payload_len} in {path!r}")
    try:
        meta = json.loads(blob[20 : 20 + json_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable metadata block at offset 20: {exc}") from exc
    vectors = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=20 + json_len)
    vectors = vectors.reshape(n, dim).astype(np.float64)
    extra = {k: v for k, v in meta.items() if k not in ("name", "classes", "ids", "labels")}
    ds = EmbeddingDataset(
        name=meta["name"],
        classes=list(meta["classes"]),
        ids=list(meta["ids"]),
        labels=np.array(meta["labels"], dtype=np.int64),
        vectors=vectors,
        extra=extra,
    )
    ds.validate()
    return ds


def import_jsonl(path: str, text_field: str, label_field: str, id_field: str | None = "id"):
    """Read (id, text, label) rows from JSON lines.

    The label vocabulary is collected in first-appearance order. Missing
    fields and duplicate ids are rejected with line numbers.
    """
    rows: list[tuple[str, str, int]] = []
    vocab: dict[str, int] = {}
    seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: invalid JSON ({exc})") from exc
            for f_ in (text_field, label_field):
                if f_ not in obj:
                    raise DataError(f"line {lineno}: missing field {f_!r}")
            raw_label = str(obj[label_field])
            if raw_label not in vocab:
                vocab[raw_label] = len(vocab)
            if id_field is not None and id_field in obj:
                iid = str(obj[id_field])
            else:
                iid = f"r{lineno}"
            if iid in seen:
                raise DataError(f"duplicate id {iid!r} on lines {seen[iid]} and {lineno}")
            seen[iid] = lineno
            rows.append((iid, str(obj[text_field]), vocab[raw_label]))
    return rows, list(vocab)


@dataclass
class ModelArtifact:
    """A trained head plus the config and provenance needed to reproduce it."""

    head: DropoutHead
    train_config: TrainConfig
    provenance: dict
    embedding_dim: int
    format_version: int = FORMAT_VERSION


def save_model(artifact: ModelArtifact, path: str) -> None:
    head = artifact.head
    tensors: list[tuple[str, np.ndarray]] = []
    for i, layer in enumerate(head.layers):
        tensors.append((f"layer{i}.weights", layer.weights))
        tensors.append((f"layer{i}.bias", layer.bias))
    if head.kernel.kind in ("rbf_rff", "laplacian_rff"):
        # frozen frequencies ride along so other readers need not regenerate
        freqs, phases = rff_frequencies(head.kernel, artifact.embedding_dim)
        tensors.append(("kernel.frequencies", freqs))
        tensors.append(("kernel.phases", phases))
    header = {
        "format_version": artifact.format_version,
        "provenance": artifact.provenance,
        "embedding_dim": artifact.embedding_dim,
        "train_config": artifact.train_config.to_dict(),
        "head": {
            "num_classes": head.num_classes,
            "tau": head.tau,
            "l2": head.l2,
            "activation": head.activation,
            "seed": head.seed,
            "fixed_keep_prob": head.fixed_keep_prob,
            "kernel": head.kernel.to_dict(),
            "beta_states": [l.beta_state.to_dict() for l in head.layers],
        },
        "tensors": [{"name": n, "shape": list(t.shape)} for n, t in tensors],
    }
    header_bytes = _canonical_json(header)
    parts = [_MODEL_MAGIC, struct.pack("<II", FORMAT_VERSION, len(header_bytes)), header_bytes]
    parts.extend(np.ascontiguousarray(t, dtype="<f8").tobytes() for _, t in tensors)
    body = b"".join(parts)
    _atomic_write(path, body + struct.pack("<Q", fnv1a64(body)))


def load_model(path: str) -> ModelArtifact:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != _MODEL_MAGIC:
        raise DataError(f"bad magic at offset 0 in {path!r}: expected EMBM")
    if len(blob) < 12:
        raise DataError(f"truncated header in {path!r}")
    version, header_len = struct.unpack_from("<II", blob, 4)
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model version {version} (reader supports {FORMAT_VERSION})")
    if len(blob) < 12 + header_len + 8:
        raise DataError(f"checksum failure: truncated model file {path!r}")
    (stored_sum,) = struct.unpack_from("<Q", blob, len(blob) - 8)
    if fnv1a64(blob[:-8]) != stored_sum:
        raise DataError(f"checksum failure reading {path!r}; no partial model returned")
    header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
    offset = 12 + header_len
    arrays: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        arrays[entry["name"]] = arr.reshape(entry["shape"]).astype(np.float64)
        offset += count * 8
    hd = header["head"]
    layers = []
    for i, bs in enumerate(hd["beta_states"]):
        layers.append(
            LayerSpec(
                weights=arrays[f"layer{i}.weights"],
                bias=arrays[f"layer{i}.bias"],
                beta_state=BetaState.from_dict(bs),
            )
        )
    head = DropoutHead(
        layers=layers,
        kernel=KernelConfig.from_dict(hd["kernel"]),
        num_classes=hd["num_classes"],
        tau=hd["tau"],
        l2=hd["l2"],
        activation=hd["activation"],
        seed=hd["seed"],
        fixed_keep_prob=hd["fixed_keep_prob"],
    )
    embedding_dim = int(header["embedding_dim"])
    if "kernel.frequencies" in arrays:
        freqs, phases = rff_frequencies(head.kernel, embedding_dim)
        if not (np.array_equal(freqs, arrays["kernel.frequencies"]) and np.array_equal(phases, arrays["kernel.phases"])):
            raise DataError(f"stored random-feature tensors in {path!r} do not match rff_seed regeneration")
    return ModelArtifact(
        head=head,
        train_config=TrainConfig.from_dict(header["train_config"]),
        provenance=header["provenance"],
        embedding_dim=embedding_dim,
        format_version=header["format_version"],
    )
