"""Extract frozen-encoder text embeddings into EMBF v1 dataset files."""

from .embf import write_embf
from .extract import ExtractError, ExtractorConfig, extract
from .readers import ReaderError, read_csv, read_jsonl

__version__ = "0.1.0"
