import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordPiece
from tokenizers.normalizers import BertNormalizer
from tokenizers.pre_tokenizers import BertPreTokenizer
from tokenizers.processors import TemplateProcessing
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

from embex.sample_data import FILLER, RADIATION_TERMS, SYSTEMIC_TERMS


def build_tiny_encoder(directory: str, hidden_size: int = 32, num_layers: int = 2) -> str:
    """A frozen randomly initialized BERT plus a WordPiece tokenizer whose
    vocabulary covers the demo corpus; loadable fully offline."""
    words = sorted(
        {
            w.lower()
            for phrase in RADIATION_TERMS + SYSTEMIC_TERMS + FILLER + ["prior therapy"]
            for w in phrase.replace(",", " ").replace(".", " ").split()
        }
    )
    vocab_list = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", ".", ","] + words
    vocab = {t: i for i, t in enumerate(vocab_list)}
    wp = Tokenizer(WordPiece(vocab=vocab, unk_token="[UNK]"))
    wp.normalizer = BertNormalizer(lowercase=True)
    wp.pre_tokenizer = BertPreTokenizer()
    wp.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=wp,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    tokenizer.save_pretrained(directory)
    config = BertConfig(
        vocab_size=len(vocab_list),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=2,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=128,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    model.eval()
    model.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def tiny_encoder_dir(tmp_path_factory) -> str:
    return build_tiny_encoder(str(tmp_path_factory.mktemp("tiny-encoder")))
