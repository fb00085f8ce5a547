"""CLI: turn labeled text files into EMBF embedding datasets."""

from __future__ import annotations

import os
import sys

import click

from .extract import POOLINGS, ExtractError, ExtractorConfig, extract
from .readers import ReaderError, read_csv, read_jsonl


@click.group()
def main() -> None:
    """Frozen-encoder embedding extraction."""


@main.command("extract")
@click.option("--input", "input_path", type=click.Path(), required=True, help="JSONL or CSV file.")
@click.option("--output", "output_path", type=click.Path(), required=True, help="EMBF file to write.")
@click.option("--encoder", "encoder_name", type=str, required=True, help="Local path or hub name.")
@click.option("--text-field", default="text", show_default=True)
@click.option("--label-field", default="label", show_default=True)
@click.option("--id-field", default="id", show_default=True)
@click.option("--pooling", type=click.Choice(POOLINGS), default="cls", show_default=True)
@click.option("--max-length", type=int, default=128, show_default=True)
@click.option("--batch-size", type=int, default=16, show_default=True)
@click.option("--device", default="cpu", show_default=True)
@click.option("--name", "dataset_name", default=None, help="Dataset name stored in the file.")
def extract_cmd(
    input_path, output_path, encoder_name, text_field, label_field, id_field,
    pooling, max_length, batch_size, device, dataset_name,
) -> None:
    try:
        reader = read_csv if input_path.lower().endswith(".csv") else read_jsonl
        rows, classes = reader(input_path, text_field, label_field, id_field)
        cfg = ExtractorConfig(
            encoder_name=encoder_name,
            pooling=pooling,
            max_length=max_length,
            batch_size=batch_size,
            device=device,
            output_path=output_path,
        )
        summary = extract(
            rows, classes, cfg,
            dataset_name=dataset_name or os.path.splitext(os.path.basename(input_path))[0],
        )
    except (ReaderError, ExtractError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3 if isinstance(exc, (ReaderError, FileNotFoundError)) else 2)
    click.echo(
        f"wrote {output_path}: n={summary['n']} dim={summary['dim']} "
        f"truncated={summary['truncated']} pooling={pooling}"
    )


@main.command("demo-corpus")
@click.option("--output", "output_path", type=click.Path(), required=True)
@click.option("--n", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def demo_corpus_cmd(output_path, n, seed) -> None:
    """Write the built-in therapy-type demo corpus as JSONL."""
    from .sample_data import therapy_notes, write_jsonl

    rows, _ = therapy_notes(n=n, seed=seed)
    write_jsonl(output_path, rows)
    click.echo(f"wrote {output_path}: {len(rows)} rows")


if __name__ == "__main__":
    main()
