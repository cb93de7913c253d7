"""Training-pair construction from segmented documents.

Three pair kinds:

* intra: adjacent sentences within a segment (label 0, continuation).
* inter: adjacent sentences straddling a gold boundary (label 1).
* hard: non-adjacent sentences from the same document (label 1,
  infinite boundary distance so distance-weighted loss terms skip
  them).

Adjacent pairs are rebalanced to a fixed boundary fraction by
downsampling continuations; hard negatives are appended afterwards and
never count toward that quota.  Every sampling step takes an explicit
seed, and per-document seeds are derived with a stable hash so results
do not depend on process hash randomization or document order.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Document, ValidationError

KIND_INTRA = "intra"
KIND_INTER = "inter"
KIND_HARD = "hard"

LABEL_CONTINUATION = 0
LABEL_BOUNDARY = 1


@dataclass(frozen=True)
class PairExample:
    """One sentence-pair training instance.

    gap_index is the gap between the two sentences for adjacent pairs
    and None for hard negatives.  dist_to_boundary is the gap distance
    to the nearest gold boundary (math.inf when the document has no
    boundaries or the pair is a hard negative).
    """

    doc_id: str
    gap_index: int | None
    text_a: str
    text_b: str
    label: int
    kind: str
    dist_to_boundary: float

    def __post_init__(self) -> None:
        if self.kind not in (KIND_INTRA, KIND_INTER, KIND_HARD):
            raise ValidationError(f"unknown pair kind {self.kind!r}")
        if self.label not in (LABEL_CONTINUATION, LABEL_BOUNDARY):
            raise ValidationError(f"label must be 0 or 1, got {self.label!r}")
        if self.kind == KIND_INTRA and self.label != LABEL_CONTINUATION:
            raise ValidationError("intra pairs must carry the continuation label")
        if self.kind == KIND_INTER:
            if self.label != LABEL_BOUNDARY:
                raise ValidationError("inter pairs must carry the boundary label")
            if self.dist_to_boundary != 0:
                raise ValidationError("inter pairs sit on a boundary (distance 0)")
        if self.kind == KIND_HARD:
            if self.label != LABEL_BOUNDARY:
                raise ValidationError("hard negatives must carry the boundary label")
            if self.gap_index is not None:
                raise ValidationError("hard negatives have no gap index")
            if not math.isinf(self.dist_to_boundary):
                raise ValidationError("hard negatives have infinite boundary distance")
        if self.kind != KIND_HARD and self.gap_index is None:
            raise ValidationError("adjacent pairs require a gap index")
        if self.dist_to_boundary < 0:
            raise ValidationError("boundary distance must be non-negative")


def extract_adjacent_pairs(doc: Document) -> list[PairExample]:
    """One pair per gap, labeled by whether the gap is a gold boundary.

    Returns an empty list for single-sentence documents.
    """
    out: list[PairExample] = []
    bset = doc.boundary_set
    for gap in range(doc.n - 1):
        if bset:
            dist: float = min(abs(gap - b) for b in bset)
        else:
            dist = math.inf
        is_boundary = gap in bset
        out.append(
            PairExample(
                doc_id=doc.doc_id,
                gap_index=gap,
                text_a=doc.sentences[gap],
                text_b=doc.sentences[gap + 1],
                label=LABEL_BOUNDARY if is_boundary else LABEL_CONTINUATION,
                kind=KIND_INTER if is_boundary else KIND_INTRA,
                dist_to_boundary=0 if is_boundary else dist,
            )
        )
    return out


def sample_hard_negatives(
    doc: Document, max_count: int = 10, rng: random.Random | None = None
) -> list[PairExample]:
    """Up to max_count non-adjacent same-document pairs, label boundary.

    Candidates are all (i, j) with j - i >= 2, sampled without
    replacement; text_a is always the earlier sentence.  Fewer pairs
    are returned when the pool is smaller than max_count.
    """
    if max_count < 0:
        raise ValidationError("max_count must be >= 0")
    rng = rng or random.Random(0)
    pool = [(i, j) for i in range(doc.n) for j in range(i + 2, doc.n)]
    chosen = sorted(rng.sample(pool, min(max_count, len(pool))))
    return [
        PairExample(
            doc_id=doc.doc_id,
            gap_index=None,
            text_a=doc.sentences[i],
            text_b=doc.sentences[j],
            label=LABEL_BOUNDARY,
            kind=KIND_HARD,
            dist_to_boundary=math.inf,
        )
        for i, j in chosen
    ]


@dataclass(frozen=True)
class BalanceResult:
    pairs: tuple[PairExample, ...]
    no_boundary_pairs: bool


def _canonical(pairs: Iterable[PairExample]) -> list[PairExample]:
    return sorted(pairs, key=lambda p: (p.doc_id, p.gap_index))


def balance(
    pairs: Sequence[PairExample],
    boundary_fraction: float = 0.30,
    rng: random.Random | None = None,
) -> BalanceResult:
    """Downsample continuation pairs towards the target boundary fraction.

    All boundary pairs (count B) are kept; continuations are uniformly
    downsampled to min(C, round(B * (1-f) / f)).  The output order is a
    deterministic shuffle.  With no boundary pairs the input is
    returned unchanged and flagged.  Hard negatives must not be passed
    here; they are appended after balancing.
    """
    if not 0.0 < boundary_fraction < 1.0:
        raise ValidationError("boundary_fraction must be in (0, 1)")
    for p in pairs:
        if p.kind == KIND_HARD:
            raise ValidationError("balance operates on adjacent pairs only")
    rng = rng or random.Random(0)
    ordered = _canonical(pairs)
    inter = [p for p in ordered if p.label == LABEL_BOUNDARY]
    intra = [p for p in ordered if p.label == LABEL_CONTINUATION]
    if not inter:
        return BalanceResult(pairs=tuple(ordered), no_boundary_pairs=True)
    target = round(len(inter) * (1.0 - boundary_fraction) / boundary_fraction)
    kept_intra = intra if target >= len(intra) else rng.sample(intra, target)
    out = inter + list(kept_intra)
    rng.shuffle(out)
    return BalanceResult(pairs=tuple(out), no_boundary_pairs=False)


def derive_seed(global_seed: int, doc_id: str) -> int:
    """Stable per-document seed; independent of interpreter hash salts."""
    digest = hashlib.blake2b(f"{global_seed}:{doc_id}".encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


@dataclass(frozen=True)
class PairSet:
    pairs: tuple[PairExample, ...]
    no_boundary_pairs: bool


def build_training_pairs(
    docs: Sequence[Document],
    seed: int,
    boundary_fraction: float = 0.30,
    hard_negatives_per_doc: int = 10,
) -> PairSet:
    """Full pipeline: adjacent pairs, balance, then per-document hard negatives.

    Hard negatives use seeds derived from (seed, doc_id), so the result
    is identical regardless of the order documents are supplied in.
    """
    adjacent: list[PairExample] = []
    for doc in docs:
        adjacent.extend(extract_adjacent_pairs(doc))
    balanced = balance(adjacent, boundary_fraction, random.Random(seed))
    hard: list[PairExample] = []
    if hard_negatives_per_doc > 0:
        for doc in sorted(docs, key=lambda d: d.doc_id):
            doc_rng = random.Random(derive_seed(seed, doc.doc_id))
            hard.extend(sample_hard_negatives(doc, hard_negatives_per_doc, doc_rng))
    return PairSet(
        pairs=balanced.pairs + tuple(hard),
        no_boundary_pairs=balanced.no_boundary_pairs,
    )


def pair_to_obj(pair: PairExample) -> dict:
    dist: int | None
    if math.isinf(pair.dist_to_boundary):
        dist = None
    else:
        dist = int(pair.dist_to_boundary)
    return {
        "doc_id": pair.doc_id,
        "gap_index": pair.gap_index,
        "text_a": pair.text_a,
        "text_b": pair.text_b,
        "label": pair.label,
        "kind": pair.kind,
        "dist": dist,
    }


def write_pairs(pairs: Iterable[PairExample], path: str | Path) -> None:
    """Write pairs as JSONL (null dist encodes an infinite distance)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair_to_obj(pair), ensure_ascii=False) + "\n")


def read_pairs(path: str | Path) -> list[PairExample]:
    """Read pairs JSONL, validating every record."""
    out: list[PairExample] = []
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
                raw_dist = obj.get("dist")
                out.append(
                    PairExample(
                        doc_id=obj["doc_id"],
                        gap_index=obj.get("gap_index"),
                        text_a=obj["text_a"],
                        text_b=obj["text_b"],
                        label=obj["label"],
                        kind=obj["kind"],
                        dist_to_boundary=math.inf if raw_dist is None else raw_dist,
                    )
                )
            except KeyError as exc:
                raise ValidationError(f"{path}: line {lineno}: missing field {exc}") from exc
            except ValidationError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc}") from exc
    return out
