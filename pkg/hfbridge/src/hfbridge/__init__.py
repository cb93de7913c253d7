"""Transformer bridge for the linear text segmentation toolkit.

Fine-tunes a pretrained encoder as a next-sentence-style pair scorer
with the same segmentation-aware loss the toolkit trains its linear
scorer with, then exports per-gap boundary probabilities in the
toolkit's JSONL wire format.  The two packages share nothing but wire
formats: pairs JSONL and corpus JSONL in, probability JSONL and a JSON
training manifest out.
"""

from .boundaries import boundary_f1, infer_boundaries, macro_boundary_f1
from .config import BridgeConfig, BridgeError, PairLossConfig
from .loss import loss_from_logits, pairwise_loss
from .model import NSPHead, PairScorer, load_checkpoint, load_scorer, save_checkpoint
from .train import export_probs, export_probs_file, train_nsp
from .wire import (
    CorpusDoc,
    GapProbability,
    PairRecord,
    read_corpus,
    read_pairs,
    write_probs,
)

__all__ = [
    "BridgeConfig",
    "BridgeError",
    "CorpusDoc",
    "GapProbability",
    "NSPHead",
    "PairLossConfig",
    "PairRecord",
    "PairScorer",
    "boundary_f1",
    "export_probs",
    "export_probs_file",
    "infer_boundaries",
    "load_checkpoint",
    "load_scorer",
    "loss_from_logits",
    "macro_boundary_f1",
    "pairwise_loss",
    "read_corpus",
    "read_pairs",
    "save_checkpoint",
    "train_nsp",
    "write_probs",
]
