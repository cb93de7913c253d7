"""Sentence-pair boundary scorers.

The built-in scorer is a logistic linear model over hashed lexical
features plus a few dense similarity features, trained by mini-batch
gradient descent on the segmentation-aware loss.  It is deliberately
small: the probability wire format lets any stronger encoder drop in as
an external scorer, and read_external_probs is the intake for that
path.

Boundary probability (p_not_next) is the positive class everywhere.
"""

from __future__ import annotations

import json
import math
import random
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Document, ValidationError
from .metrics import boundary_f1
from .pairgen import PairExample
from .segloss import LossConfig, seg_loss_grad_logits, sigmoid

FEATURE_DIM = 2**18
DENSE_NAMES = ("token_jaccard", "tf_cosine", "length_ratio", "marker_a", "marker_b")
MODEL_VERSION = 1
PROB_CLAMP = 1e-7

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_ENUM_RE = re.compile(r"^\d+\s*[.)\]:;-]")
_DASH_RE = re.compile(r"^[-–—•*]")


def tokenize(text: str) -> list[str]:
    """Case-folded word tokens; punctuation and whitespace are separators."""
    return _TOKEN_RE.findall(unicodedata.normalize("NFKC", text).casefold())


@lru_cache(maxsize=1 << 16)
def _hash_index(feature: str) -> int:
    digest = blake2b(feature.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % FEATURE_DIM


def _starts_with_marker(text: str) -> bool:
    stripped = text.lstrip()
    if _ENUM_RE.match(stripped) or _DASH_RE.match(stripped):
        return True
    first = stripped.split(maxsplit=1)
    if first:
        tok = first[0]
        if len(tok) >= 2 and tok.isalpha() and tok.isupper():
            return True
    return False


@dataclass(frozen=True)
class PairFeatures:
    """Hashed sparse counts plus dense similarity features for one pair."""

    indices: np.ndarray
    values: np.ndarray
    dense: np.ndarray


def _side_features(prefix: str, tokens: list[str], counts: dict[int, float]) -> None:
    for tok in tokens:
        idx = _hash_index(prefix + tok)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    for a, b in zip(tokens, tokens[1:]):
        idx = _hash_index(f"{prefix}{a} {b}")
        counts[idx] = counts.get(idx, 0.0) + 1.0


def featurize(text_a: str, text_b: str) -> PairFeatures:
    """Deterministic features for a sentence pair.

    Sparse: unigram and bigram counts of each side under "A:"/"B:"
    namespaces, hashed into FEATURE_DIM buckets.  Dense: token Jaccard,
    term-frequency cosine, token length ratio, and one enumeration or
    heading marker flag per side.
    """
    toks_a = tokenize(text_a)
    toks_b = tokenize(text_b)
    counts: dict[int, float] = {}
    _side_features("A:", toks_a, counts)
    _side_features("B:", toks_b, counts)
    items = sorted(counts.items())
    indices = np.array([i for i, _ in items], dtype=np.int64)
    values = np.array([v for _, v in items], dtype=np.float64)

    set_a, set_b = set(toks_a), set(toks_b)
    union = set_a | set_b
    if union:
        jaccard = len(set_a & set_b) / len(union)
    else:
        jaccard = 1.0
    cosine = _tf_cosine(toks_a, toks_b)
    max_len = max(len(toks_a), len(toks_b))
    length_ratio = min(len(toks_a), len(toks_b)) / max_len if max_len else 1.0
    dense = np.array(
        [
            jaccard,
            cosine,
            length_ratio,
            1.0 if _starts_with_marker(text_a) else 0.0,
            1.0 if _starts_with_marker(text_b) else 0.0,
        ],
        dtype=np.float64,
    )
    return PairFeatures(indices=indices, values=values, dense=dense)


def _tf_cosine(toks_a: list[str], toks_b: list[str]) -> float:
    if not toks_a and not toks_b:
        return 1.0
    if not toks_a or not toks_b:
        return 0.0
    ca: dict[str, int] = {}
    cb: dict[str, int] = {}
    for t in toks_a:
        ca[t] = ca.get(t, 0) + 1
    for t in toks_b:
        cb[t] = cb.get(t, 0) + 1
    dot = sum(ca[t] * cb[t] for t in ca.keys() & cb.keys())
    na = sum(v * v for v in ca.values())
    nb = sum(v * v for v in cb.values())
    if dot == 0:
        return 0.0
    return dot / math.sqrt(na * nb)


@dataclass
class LinearScorer:
    """Logistic model: p_not_next = logistic(w sparse + w dense + bias)."""

    weights: np.ndarray
    bias: float
    feature_dim: int = FEATURE_DIM
    dense_names: tuple[str, ...] = DENSE_NAMES
    version: int = MODEL_VERSION

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        expected = self.feature_dim + len(self.dense_names)
        if self.weights.shape != (expected,):
            raise ValidationError(
                f"weight vector has shape {self.weights.shape}, expected ({expected},)"
            )
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValidationError("model weights must be finite")

    @classmethod
    def zeros(cls) -> "LinearScorer":
        return cls(weights=np.zeros(FEATURE_DIM + len(DENSE_NAMES)), bias=0.0)


def decision_value(model: LinearScorer, f: PairFeatures) -> float:
    """Raw logit w.x + b for one pair."""
    z = float(np.dot(model.weights[f.indices], f.values))
    z += float(np.dot(model.weights[model.feature_dim :], f.dense))
    return z + model.bias


def predict(model: LinearScorer, f: PairFeatures) -> float:
    """Boundary probability, clamped strictly inside (0, 1)."""
    p = float(sigmoid(np.array([decision_value(model, f)]))[0])
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


@dataclass(frozen=True)
class ProbabilityRecord:
    """Boundary probability for one gap of one document."""

    doc_id: str
    gap_index: int
    p_not_next: float

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValidationError("probability record requires a doc_id")
        if not isinstance(self.gap_index, int) or isinstance(self.gap_index, bool):
            raise ValidationError(f"{self.doc_id}: gap_index must be an integer")
        if self.gap_index < 0:
            raise ValidationError(f"{self.doc_id}: gap_index must be >= 0")
        if not 0.0 <= self.p_not_next <= 1.0:
            raise ValidationError(
                f"{self.doc_id}: gap {self.gap_index}: p_not_next "
                f"{self.p_not_next!r} outside [0, 1]"
            )


def score_document(model: LinearScorer, doc: Document) -> list[ProbabilityRecord]:
    """One probability per gap, in gap order; empty for single sentences."""
    out = []
    for gap in range(doc.n - 1):
        f = featurize(doc.sentences[gap], doc.sentences[gap + 1])
        out.append(
            ProbabilityRecord(
                doc_id=doc.doc_id, gap_index=gap, p_not_next=predict(model, f)
            )
        )
    return out


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch gradient descent settings for the built-in scorer."""

    learning_rate: float = 0.1
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    l2: float = 1e-6

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValidationError("learning_rate, batch_size and max_epochs must be positive")
        if self.patience < 0 or self.l2 < 0:
            raise ValidationError("patience and l2 must be non-negative")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_bf1: float


@dataclass
class TrainLog:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_val_bf1: float = -1.0


def _batch_loss(
    model: LinearScorer,
    feats: list[PairFeatures],
    labels: np.ndarray,
    dists: np.ndarray,
    loss_cfg: LossConfig,
) -> float:
    z = np.array([decision_value(model, f) for f in feats])
    value, _ = seg_loss_grad_logits(z, labels, dists, loss_cfg)
    return value.total


def _val_bf1_cached(
    model: LinearScorer,
    val_feats: Sequence[tuple[Document, list[PairFeatures]]],
    tau: float = 0.5,
) -> float:
    scores = []
    for doc, feats in val_feats:
        hyp = [gap for gap, f in enumerate(feats) if predict(model, f) > tau]
        scores.append(boundary_f1(doc.boundaries, hyp))
    return sum(scores) / len(scores) if scores else 0.0


def train(
    train_pairs: Sequence[PairExample],
    val_docs: Sequence[Document],
    loss_cfg: LossConfig | None = None,
    train_cfg: TrainConfig | None = None,
) -> tuple[LinearScorer, TrainLog]:
    """Fit the linear scorer; keep the epoch with the best validation B-F1.

    Stops once `patience` consecutive epochs fail to improve validation
    B-F1 at threshold 0.5 (patience 0 runs exactly one epoch).
    Deterministic for a fixed TrainConfig.seed.
    """
    if not train_pairs:
        raise ValidationError("training requires at least one pair")
    loss_cfg = loss_cfg or LossConfig()
    train_cfg = train_cfg or TrainConfig()

    feats = [featurize(p.text_a, p.text_b) for p in train_pairs]
    labels = np.array([float(p.label) for p in train_pairs])
    dists = np.array([p.dist_to_boundary for p in train_pairs])
    val_feats = [
        (
            doc,
            [featurize(doc.sentences[g], doc.sentences[g + 1]) for g in range(doc.n - 1)],
        )
        for doc in val_docs
    ]

    model = LinearScorer.zeros()
    rng = random.Random(train_cfg.seed)
    dense_start = model.feature_dim
    log = TrainLog()
    best_weights = model.weights.copy()
    best_bias = model.bias
    stale = 0

    order = list(range(len(train_pairs)))
    for epoch in range(1, train_cfg.max_epochs + 1):
        rng.shuffle(order)
        for start in range(0, len(order), train_cfg.batch_size):
            batch = order[start : start + train_cfg.batch_size]
            z = np.array([decision_value(model, feats[i]) for i in batch])
            _, grad_z = seg_loss_grad_logits(z, labels[batch], dists[batch], loss_cfg)
            # L2 decay on weights only, then the batch gradient step.
            if train_cfg.l2:
                model.weights *= 1.0 - train_cfg.learning_rate * train_cfg.l2
            for gz, i in zip(grad_z, batch):
                f = feats[i]
                step = train_cfg.learning_rate * gz
                np.subtract.at(model.weights, f.indices, step * f.values)
                model.weights[dense_start:] -= step * f.dense
                model.bias -= step

        train_loss = _batch_loss(model, feats, labels, dists, loss_cfg)
        val_bf1 = _val_bf1_cached(model, val_feats)
        log.epochs.append(EpochStats(epoch=epoch, train_loss=train_loss, val_bf1=val_bf1))
        if val_bf1 > log.best_val_bf1:
            log.best_val_bf1 = val_bf1
            log.best_epoch = epoch
            best_weights = model.weights.copy()
            best_bias = model.bias
            stale = 0
        else:
            stale += 1
        if stale >= train_cfg.patience:
            break

    model.weights = best_weights
    model.bias = best_bias
    return model, log


def save_model(model: LinearScorer, path: str | Path) -> None:
    """Versioned JSON persistence; floats round-trip exactly."""
    payload = {
        "version": model.version,
        "feature_dim": model.feature_dim,
        "dense_names": list(model.dense_names),
        "weights": model.weights.tolist(),
        "bias": model.bias,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path: str | Path) -> LinearScorer:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: corrupt model file ({exc})") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise ValidationError(f"{path}: not a model file")
    if payload["version"] != MODEL_VERSION:
        raise ValidationError(
            f"{path}: model version {payload['version']!r} unsupported "
            f"(expected {MODEL_VERSION})"
        )
    try:
        return LinearScorer(
            weights=np.array(payload["weights"], dtype=np.float64),
            bias=float(payload["bias"]),
            feature_dim=int(payload["feature_dim"]),
            dense_names=tuple(payload["dense_names"]),
            version=int(payload["version"]),
        )
    except KeyError as exc:
        raise ValidationError(f"{path}: missing model field {exc}") from exc


def prob_record_to_obj(rec: ProbabilityRecord) -> dict:
    return {"doc_id": rec.doc_id, "gap_index": rec.gap_index, "p_not_next": rec.p_not_next}


def write_probs(records: Iterable[ProbabilityRecord], path: str | Path) -> None:
    """Write probability records as JSONL."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(prob_record_to_obj(rec), ensure_ascii=False) + "\n")


def read_external_probs(
    path: str | Path, corpus: Sequence[Document] | None = None
) -> dict[str, list[ProbabilityRecord]]:
    """Read probability JSONL grouped by document, sorted by gap.

    Rejects duplicate (doc_id, gap_index) records and out-of-range
    probabilities.  When a corpus is supplied, every document must be
    covered completely: exactly one record per gap, no unknown ids.
    """
    by_doc: dict[str, list[ProbabilityRecord]] = {}
    seen: set[tuple[str, int]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: malformed JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise ValidationError(f"{path}: line {lineno}: expected a JSON object")
            try:
                rec = ProbabilityRecord(
                    doc_id=obj["doc_id"],
                    gap_index=obj["gap_index"],
                    p_not_next=obj["p_not_next"],
                )
            except KeyError as exc:
                raise ValidationError(f"{path}: line {lineno}: missing field {exc}") from exc
            except (ValidationError, TypeError) as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc}") from exc
            key = (rec.doc_id, rec.gap_index)
            if key in seen:
                raise ValidationError(
                    f"{path}: line {lineno}: duplicate record for doc "
                    f"{rec.doc_id!r} gap {rec.gap_index}"
                )
            seen.add(key)
            by_doc.setdefault(rec.doc_id, []).append(rec)
    for records in by_doc.values():
        records.sort(key=lambda r: r.gap_index)
    if corpus is not None:
        _check_complete(by_doc, corpus, path)
    return by_doc


def _check_complete(
    by_doc: Mapping[str, list[ProbabilityRecord]],
    corpus: Sequence[Document],
    path: str | Path,
) -> None:
    known = {doc.doc_id: doc.n for doc in corpus}
    unknown = sorted(set(by_doc) - set(known))
    if unknown:
        raise ValidationError(f"{path}: records for unknown documents: {', '.join(unknown)}")
    for doc_id, n in known.items():
        gaps = [r.gap_index for r in by_doc.get(doc_id, [])]
        expected = list(range(n - 1))
        if gaps != expected:
            raise ValidationError(
                f"{path}: document {doc_id!r} gaps {gaps} do not cover 0..{n - 2}"
            )
