"""Encoder + two-class head for sentence-pair continuity scoring."""

from __future__ import annotations

import os

import torch

from .config import BridgeError

HEAD_FILE = "nsp_head.pt"


class NSPHead(torch.nn.Module):
    """Linear head over the pooled encoding; logit 1 scores not_next."""

    def __init__(self, hidden_size: int):
        super().__init__()
        self.classifier = torch.nn.Linear(hidden_size, 2)

    def forward(self, pooled: torch.Tensor) -> torch.Tensor:
        return self.classifier(pooled)


class PairScorer(torch.nn.Module):
    """Runs the encoder on a tokenized sentence pair and scores it."""

    def __init__(self, encoder: torch.nn.Module, head: NSPHead):
        super().__init__()
        self.encoder = encoder
        self.head = head

    def forward(
        self,
        input_ids: torch.Tensor,
        attention_mask: torch.Tensor,
        token_type_ids: torch.Tensor | None = None,
    ) -> torch.Tensor:
        kwargs = {"input_ids": input_ids, "attention_mask": attention_mask}
        if token_type_ids is not None:
            kwargs["token_type_ids"] = token_type_ids
        out = self.encoder(**kwargs)
        pooled = getattr(out, "pooler_output", None)
        if pooled is None:
            pooled = out.last_hidden_state[:, 0]
        return self.head(pooled)


def load_scorer(model_ref: str):
    """(PairScorer, tokenizer) from a model name or local directory.

    The head starts freshly initialized; call after seeding the torch
    RNG for reproducible runs.
    """
    from transformers import AutoModel, AutoTokenizer

    try:
        encoder = AutoModel.from_pretrained(model_ref)
        tokenizer = AutoTokenizer.from_pretrained(model_ref)
    except Exception as exc:
        raise BridgeError(f"pretrained model unavailable at {model_ref!r}: {exc}") from exc
    head = NSPHead(encoder.config.hidden_size)
    return PairScorer(encoder, head), tokenizer


def save_checkpoint(scorer: PairScorer, tokenizer, out_dir: str | os.PathLike) -> None:
    """Persist encoder, tokenizer and head so load_checkpoint restores them."""
    os.makedirs(out_dir, exist_ok=True)
    scorer.encoder.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    torch.save(scorer.head.state_dict(), os.path.join(out_dir, HEAD_FILE))


def load_checkpoint(ckpt_dir: str | os.PathLike):
    """(PairScorer, tokenizer) from a directory written by save_checkpoint."""
    scorer, tokenizer = load_scorer(os.fspath(ckpt_dir))
    head_path = os.path.join(ckpt_dir, HEAD_FILE)
    if not os.path.exists(head_path):
        raise BridgeError(f"checkpoint is missing {HEAD_FILE}: {ckpt_dir}")
    state = torch.load(head_path, map_location="cpu", weights_only=True)
    scorer.head.load_state_dict(state)
    return scorer, tokenizer
