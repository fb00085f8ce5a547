"""Labeled-text table readers: JSONL and CSV with configurable field names."""

from __future__ import annotations

import csv
import json


class ReaderError(ValueError):
    pass


def _collect(rows_iter, text_field: str, label_field: str, id_field: str | None):
    rows: list[tuple[str, str, int]] = []
    vocab: dict[str, int] = {}
    seen: dict[str, int] = {}
    for lineno, obj in rows_iter:
        for f in (text_field, label_field):
            if f not in obj or obj[f] is None or obj[f] == "":
                raise ReaderError(f"line {lineno}: missing field {f!r}")
        raw_label = str(obj[label_field])
        if raw_label not in vocab:
            vocab[raw_label] = len(vocab)
        iid = str(obj[id_field]) if id_field and id_field in obj and obj[id_field] != "" else f"r{lineno}"
        if iid in seen:
            raise ReaderError(f"duplicate id {iid!r} on lines {seen[iid]} and {lineno}")
        seen[iid] = lineno
        rows.append((iid, str(obj[text_field]), vocab[raw_label]))
    return rows, list(vocab)


def read_jsonl(path: str, text_field: str = "text", label_field: str = "label", id_field: str | None = "id"):
    """(id, text, label) rows; label vocabulary in first-appearance order."""

    def gen():
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield lineno, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ReaderError(f"line {lineno}: invalid JSON ({exc})") from exc

    return _collect(gen(), text_field, label_field, id_field)


def read_csv(path: str, text_field: str = "text", label_field: str = "label", id_field: str | None = "id"):
    """Same contract as read_jsonl for CSV files with a header row."""

    def gen():
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ReaderError("empty CSV: no header row")
            for lineno, row in enumerate(reader, start=2):
                yield lineno, row

    return _collect(gen(), text_field, label_field, id_field)
