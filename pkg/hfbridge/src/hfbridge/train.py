"""Fine-tuning loop and gap-probability export.

The bridge talks to the linear toolkit only through files: it reads
the toolkit's training-pair and corpus JSONL, fine-tunes a pretrained
encoder with the shared pairwise loss, and writes gap probabilities in
the JSONL format the toolkit accepts as an external scorer.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import logging
import os
import random

import torch

from .boundaries import infer_boundaries, macro_boundary_f1
from .config import BridgeConfig, BridgeError
from .loss import loss_from_logits
from .model import PairScorer, load_checkpoint, load_scorer, save_checkpoint
from .wire import CorpusDoc, GapProbability, read_corpus, read_pairs, write_probs

log = logging.getLogger(__name__)

VAL_TAU = 0.5
MODEL_INPUT_KEYS = ("input_ids", "attention_mask", "token_type_ids")
MANIFEST_FILE = "train_manifest.json"


def _encode_pairs(tokenizer, texts_a, texts_b, max_seq_length):
    """Per-pair feature dicts capped at max_seq_length, plus how many
    pairs lost tokens to that cap."""
    full = tokenizer(list(texts_a), list(texts_b), truncation=False)
    truncated = sum(1 for ids in full["input_ids"] if len(ids) > max_seq_length)
    enc = tokenizer(
        list(texts_a),
        list(texts_b),
        truncation="longest_first",
        max_length=max_seq_length,
    )
    keys = [k for k in enc.keys() if k in MODEL_INPUT_KEYS]
    features = [{k: enc[k][i] for k in keys} for i in range(len(texts_a))]
    return features, truncated


def _chunks(seq, size):
    for start in range(0, len(seq), size):
        yield seq[start : start + size]


def _forward(scorer: PairScorer, tokenizer, feats, device):
    enc = tokenizer.pad(feats, padding=True, return_tensors="pt")
    inputs = {k: v.to(device) for k, v in enc.items() if k in MODEL_INPUT_KEYS}
    return scorer(**inputs)


def _full_loss(scorer, tokenizer, features, labels, dists, cfg: BridgeConfig, device) -> float:
    """Mean pairwise loss over the whole set, eval mode, no grad.

    Each loss term is a mean, so batch means weighted by batch size
    recombine to the exact full-set value.
    """
    scorer.eval()
    total = 0.0
    with torch.no_grad():
        for idx in _chunks(list(range(len(features))), cfg.batch_size):
            logits = _forward(scorer, tokenizer, [features[i] for i in idx], device)
            loss, _ = loss_from_logits(logits, labels[idx], dists[idx], cfg.loss)
            total += float(loss.item()) * len(idx)
    return total / len(features)


def export_probs(
    scorer: PairScorer,
    tokenizer,
    docs: list[CorpusDoc],
    cfg: BridgeConfig,
) -> dict[str, list[float]]:
    """P(not_next) for every gap of every document, in gap order."""
    scorer.eval()
    device = next(scorer.parameters()).device
    out: dict[str, list[float]] = {}
    with torch.no_grad():
        for doc in docs:
            if doc.n < 2:
                out[doc.doc_id] = []
                continue
            features, _ = _encode_pairs(
                tokenizer, doc.sentences[:-1], doc.sentences[1:], cfg.max_seq_length
            )
            probs: list[float] = []
            for feats in _chunks(features, cfg.batch_size):
                logits = _forward(scorer, tokenizer, feats, device)
                probs.extend(torch.softmax(logits.double(), dim=1)[:, 1].tolist())
            out[doc.doc_id] = probs
    return out


def _val_bf1(scorer, tokenizer, docs, cfg: BridgeConfig) -> float:
    probs = export_probs(scorer, tokenizer, docs, cfg)
    return macro_boundary_f1(
        (doc.boundaries, infer_boundaries(probs[doc.doc_id], VAL_TAU)) for doc in docs
    )


def train_nsp(pairs_path, val_corpus_path, cfg: BridgeConfig, out_dir) -> dict:
    """Fine-tune cfg.model_ref on a pairs file, keep the epoch with the
    best validation boundary F1, save a checkpoint, return the manifest."""
    pairs = read_pairs(pairs_path)
    if not pairs:
        raise BridgeError(f"no training pairs in {pairs_path}")
    val_docs = read_corpus(val_corpus_path)
    if not val_docs:
        raise BridgeError(f"no validation documents in {val_corpus_path}")
    os.makedirs(out_dir, exist_ok=True)

    torch.manual_seed(cfg.seed)
    scorer, tokenizer = load_scorer(cfg.model_ref)
    device = torch.device("cuda" if torch.cuda.is_available() else "cpu")
    scorer.to(device)

    features, truncated = _encode_pairs(
        tokenizer,
        [p.text_a for p in pairs],
        [p.text_b for p in pairs],
        cfg.max_seq_length,
    )
    if truncated:
        log.warning(
            "%d of %d pairs exceed max_seq_length=%d and were truncated",
            truncated,
            len(pairs),
            cfg.max_seq_length,
        )
    labels = torch.tensor([p.label for p in pairs], dtype=torch.float64)
    dists = torch.tensor([p.dist for p in pairs], dtype=torch.float64)

    initial_train_loss = _full_loss(scorer, tokenizer, features, labels, dists, cfg, device)

    optimizer = torch.optim.AdamW(scorer.parameters(), lr=cfg.learning_rate)
    rng = random.Random(cfg.seed)
    history: list[dict] = []
    best_epoch = 0
    best_val_bf1 = -1.0
    best_state: dict | None = None
    for epoch in range(1, cfg.max_epochs + 1):
        order = list(range(len(features)))
        rng.shuffle(order)
        scorer.train()
        loss_sum = 0.0
        for idx in _chunks(order, cfg.batch_size):
            optimizer.zero_grad()
            logits = _forward(scorer, tokenizer, [features[i] for i in idx], device)
            loss, _ = loss_from_logits(logits, labels[idx], dists[idx], cfg.loss)
            loss.backward()
            optimizer.step()
            loss_sum += float(loss.item()) * len(idx)
        train_loss = loss_sum / len(features)
        val_bf1 = _val_bf1(scorer, tokenizer, val_docs, cfg)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_bf1": val_bf1})
        log.info("epoch %d: train_loss=%.6f val_bf1=%.4f", epoch, train_loss, val_bf1)
        if val_bf1 > best_val_bf1:
            best_epoch = epoch
            best_val_bf1 = val_bf1
            best_state = {k: v.detach().clone() for k, v in scorer.state_dict().items()}

    if best_state is not None:
        scorer.load_state_dict(best_state)
    final_train_loss = _full_loss(scorer, tokenizer, features, labels, dists, cfg, device)
    save_checkpoint(scorer, tokenizer, out_dir)

    import transformers

    manifest = {
        "model_ref": cfg.model_ref,
        "config": dataclasses.asdict(cfg),
        "seed": cfg.seed,
        "n_pairs": len(pairs),
        "n_val_docs": len(val_docs),
        "truncated_pairs": truncated,
        "epochs_run": len(history),
        "best_epoch": best_epoch,
        "best_val_bf1": best_val_bf1,
        "initial_train_loss": initial_train_loss,
        "final_train_loss": final_train_loss,
        "epochs": history,
        "backend": {
            "torch": torch.__version__,
            "transformers": transformers.__version__,
            "device": str(device),
        },
    }
    with open(os.path.join(out_dir, MANIFEST_FILE), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def export_probs_file(
    checkpoint_dir,
    corpus_path,
    out_path,
    max_seq_length: int = 256,
    batch_size: int = 32,
) -> int:
    """Score every gap of a corpus with a saved checkpoint and write
    the probabilities as JSONL.  Returns the record count."""
    scorer, tokenizer = load_checkpoint(checkpoint_dir)
    docs = read_corpus(corpus_path)
    cfg = BridgeConfig(
        model_ref=os.fspath(checkpoint_dir),
        max_seq_length=max_seq_length,
        batch_size=batch_size,
    )
    probs = export_probs(scorer, tokenizer, docs, cfg)
    records = [
        GapProbability(doc_id=doc.doc_id, gap_index=i, p_not_next=p)
        for doc in docs
        for i, p in enumerate(probs[doc.doc_id])
    ]
    write_probs(records, out_path)
    return len(records)
