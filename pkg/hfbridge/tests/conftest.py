"""Shared fixtures for the bridge tests.

The tests build everything locally: a small randomly initialized
BERT-style encoder saved as a regular checkpoint (so from_pretrained
exercises the standard loading path without network access) and a
synthetic corpus written through the linear toolkit's wire formats.
Tests import the toolkit to generate fixtures and check parity; the
bridge's runtime code only ever sees the files.
"""

from __future__ import annotations

import random

import pytest
import torch

from textseg import corpus as ts_corpus
from textseg import pairgen as ts_pairgen
from textseg import synth as ts_synth

SMOKE_PAIRS = 200


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory) -> str:
    """Checkpoint directory holding a 2-layer encoder plus a WordPiece
    tokenizer whose vocabulary covers the synthetic corpus."""
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import BertNormalizer
    from tokenizers.pre_tokenizers import BertPreTokenizer
    from tokenizers.processors import BertProcessing
    from transformers import BertConfig, BertModel, BertTokenizerFast

    words = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    words += [f"t{t:02d}w{w:02d}" for t in range(24) for w in range(50)]
    words += [f"nz{w:02d}" for w in range(50)]
    words.append(".")
    vocab = {tok: i for i, tok in enumerate(words)}
    backend = Tokenizer(WordPiece(vocab=vocab, unk_token="[UNK]"))
    backend.normalizer = BertNormalizer(lowercase=True)
    backend.pre_tokenizer = BertPreTokenizer()
    backend.post_processor = BertProcessing(
        sep=("[SEP]", vocab["[SEP]"]), cls=("[CLS]", vocab["[CLS]"])
    )
    tokenizer = BertTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=128,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=256,
        max_position_embeddings=128,
    )
    torch.manual_seed(1234)
    encoder = BertModel(config)
    path = tmp_path_factory.mktemp("encoder")
    encoder.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def synth_docs():
    return ts_synth.generate_corpus(ts_synth.SynthConfig(num_docs=16, num_groups=4), seed=11)


@pytest.fixture(scope="session")
def wire_dir(tmp_path_factory, synth_docs):
    """Corpus and pairs JSONL written by the toolkit.

    val.jsonl: 3 validation documents; ten.jsonl: 10 documents for
    export; pairs.jsonl: 200 sampled training pairs for the smoke run;
    pairs_all.jsonl: every generated pair, hard negatives included.
    """
    d = tmp_path_factory.mktemp("wire")
    ts_corpus.write_corpus(synth_docs[13:], d / "val.jsonl")
    ts_corpus.write_corpus(synth_docs[:10], d / "ten.jsonl")
    pair_set = ts_pairgen.build_training_pairs(synth_docs[:13], 7, 0.30, 2)
    assert len(pair_set.pairs) >= SMOKE_PAIRS
    smoke = random.Random(3).sample(list(pair_set.pairs), SMOKE_PAIRS)
    ts_pairgen.write_pairs(smoke, d / "pairs.jsonl")
    ts_pairgen.write_pairs(pair_set.pairs, d / "pairs_all.jsonl")
    return d


@pytest.fixture(scope="session")
def smoke_run(tmp_path_factory, encoder_dir, wire_dir):
    """One-epoch fine-tune of the local encoder on the 200-pair file.

    The default learning rate is conservative; the smoke run raises it
    so a single epoch moves the loss measurably.
    """
    from hfbridge import BridgeConfig, train_nsp

    out = tmp_path_factory.mktemp("smoke_run")
    cfg = BridgeConfig(
        model_ref=encoder_dir,
        learning_rate=1e-4,
        batch_size=8,
        max_epochs=1,
        max_seq_length=96,
        seed=0,
    )
    manifest = train_nsp(wire_dir / "pairs.jsonl", wire_dir / "val.jsonl", cfg, out)
    return manifest, out
