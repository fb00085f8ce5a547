"""Frozen-encoder feature extraction.

Loads a pretrained transformer (local path or hub name), runs it in eval
mode with no gradients, pools token states to one vector per text, and
writes an EMBF v1 file. Pooling, truncation length, and the encoder name are
recorded in the file metadata so every downstream report stays traceable to
its extraction settings. Encoders are never fine-tuned here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embf import write_embf

POOLINGS = ("cls", "mean_tokens")


class ExtractError(RuntimeError):
    pass


@dataclass
class ExtractorConfig:
    encoder_name: str
    pooling: str = "cls"
    max_length: int = 128
    batch_size: int = 16
    device: str = "cpu"
    output_path: str = "out.embf"

    def validate(self) -> None:
        if not self.encoder_name:
            raise ExtractError("encoder_name is required")
        if self.pooling not in POOLINGS:
            raise ExtractError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.max_length < 1 or self.batch_size < 1:
            raise ExtractError("max_length and batch_size must be >= 1")


def _load_encoder(cfg: ExtractorConfig):
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(cfg.encoder_name)
        model = AutoModel.from_pretrained(cfg.encoder_name)
    except Exception as exc:
        raise ExtractError(
            f"encoder {cfg.encoder_name!r} is not available locally and could not be fetched: {exc}"
        ) from exc
    model.eval()
    model.to(cfg.device)
    for p in model.parameters():
        p.requires_grad_(False)
    return tokenizer, model, torch


def extract(
    rows: list[tuple[str, str, int]],
    classes: list[str],
    cfg: ExtractorConfig,
    dataset_name: str = "extracted",
) -> dict:
    """Embed (id, text, label) rows and write cfg.output_path.

    Returns a summary dict: n, dim, truncated (count of over-length texts).
    """
    cfg.validate()
    if not rows:
        raise ExtractError("no input texts to extract")
    tokenizer, model, torch = _load_encoder(cfg)

    ids = [r[0] for r in rows]
    texts = [r[1] for r in rows]
    labels = [r[2] for r in rows]

    truncated = 0
    chunks: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(texts), cfg.batch_size):
            batch = texts[start : start + cfg.batch_size]
            over = tokenizer(batch, truncation=False, padding=False)["input_ids"]
            truncated += sum(len(seq) > cfg.max_length for seq in over)
            enc = tokenizer(
                batch,
                truncation=True,
                padding=True,
                max_length=cfg.max_length,
                return_tensors="pt",
            ).to(cfg.device)
            out = model(**enc).last_hidden_state
            if cfg.pooling == "cls":
                pooled = out[:, 0, :]
            else:
                mask = enc["attention_mask"].unsqueeze(-1).to(out.dtype)
                pooled = (out * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
            chunks.append(pooled.cpu().numpy().astype(np.float32))

    vectors = np.concatenate(chunks, axis=0)
    write_embf(
        cfg.output_path,
        name=dataset_name,
        classes=classes,
        ids=ids,
        labels=labels,
        vectors=vectors,
        extra={
            "encoder_name": cfg.encoder_name,
            "pooling": cfg.pooling,
            "max_length": cfg.max_length,
            "truncated_count": truncated,
        },
    )
    return {"n": len(ids), "dim": int(vectors.shape[1]), "truncated": truncated}
