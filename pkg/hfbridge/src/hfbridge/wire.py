"""JSONL wire formats shared with the linear segmentation toolkit.

Three line formats travel between the packages:

* training pairs: {doc_id, gap_index, text_a, text_b, label, kind, dist}
  where dist is null for an infinite distance and gap_index is null for
  hard negatives;
* corpus documents: {doc_id, sentences, boundaries, date, group};
* gap probabilities: {doc_id, gap_index, p_not_next}.

The readers validate rather than trust: the bridge consumes files, not
the toolkit's internals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .config import BridgeError

PAIR_KINDS = ("intra", "inter", "hard")


@dataclass(frozen=True)
class PairRecord:
    """One training pair; label 1 means the sentences are not adjacent
    in the same segment (a boundary), dist is the gap distance to the
    nearest true boundary (inf for hard negatives and boundaryless
    documents)."""

    doc_id: str
    gap_index: int | None
    text_a: str
    text_b: str
    label: int
    kind: str
    dist: float


@dataclass(frozen=True)
class CorpusDoc:
    """One document: ordered sentences plus gold boundary gap indices."""

    doc_id: str
    sentences: tuple[str, ...]
    boundaries: tuple[int, ...]
    group: str | None = None
    date: str | None = None

    @property
    def n(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class GapProbability:
    """Probability that gap_index is a segment boundary."""

    doc_id: str
    gap_index: int
    p_not_next: float


def _lines(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(f"{path}: line {lineno}: malformed JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise BridgeError(f"{path}: line {lineno}: expected a JSON object")
            yield lineno, obj


def read_pairs(path: str | Path) -> list[PairRecord]:
    """Read and validate a training-pairs JSONL file."""
    out: list[PairRecord] = []
    required = {"doc_id", "gap_index", "text_a", "text_b", "label", "kind", "dist"}
    for lineno, obj in _lines(path):
        missing = required - obj.keys()
        if missing:
            raise BridgeError(f"{path}: line {lineno}: missing fields {sorted(missing)}")
        kind = obj["kind"]
        if kind not in PAIR_KINDS:
            raise BridgeError(f"{path}: line {lineno}: unknown pair kind {kind!r}")
        label = obj["label"]
        if label not in (0, 1) or isinstance(label, bool):
            raise BridgeError(f"{path}: line {lineno}: label must be 0 or 1")
        gap = obj["gap_index"]
        if gap is None:
            if kind != "hard":
                raise BridgeError(f"{path}: line {lineno}: only hard pairs may omit gap_index")
        elif not isinstance(gap, int) or isinstance(gap, bool) or gap < 0:
            raise BridgeError(f"{path}: line {lineno}: gap_index must be a non-negative integer")
        raw_dist = obj["dist"]
        if raw_dist is None:
            dist = math.inf
        elif isinstance(raw_dist, int) and not isinstance(raw_dist, bool) and raw_dist >= 0:
            dist = float(raw_dist)
        else:
            raise BridgeError(
                f"{path}: line {lineno}: dist must be a non-negative integer or null"
            )
        text_a, text_b = obj["text_a"], obj["text_b"]
        if not isinstance(text_a, str) or not isinstance(text_b, str):
            raise BridgeError(f"{path}: line {lineno}: pair texts must be strings")
        if not isinstance(obj["doc_id"], str) or not obj["doc_id"]:
            raise BridgeError(f"{path}: line {lineno}: doc_id must be a non-empty string")
        out.append(
            PairRecord(
                doc_id=obj["doc_id"],
                gap_index=gap,
                text_a=text_a,
                text_b=text_b,
                label=label,
                kind=kind,
                dist=dist,
            )
        )
    return out


def read_corpus(path: str | Path) -> list[CorpusDoc]:
    """Read and validate a corpus JSONL file."""
    docs: list[CorpusDoc] = []
    seen: set[str] = set()
    for lineno, obj in _lines(path):
        doc_id = obj.get("doc_id")
        if not isinstance(doc_id, str) or not doc_id:
            raise BridgeError(f"{path}: line {lineno}: doc_id must be a non-empty string")
        if doc_id in seen:
            raise BridgeError(f"{path}: line {lineno}: duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        sentences = obj.get("sentences")
        if not isinstance(sentences, list) or not sentences:
            raise BridgeError(f"{path}: line {lineno}: sentences must be a non-empty list")
        if any(not isinstance(s, str) or not s.strip() for s in sentences):
            raise BridgeError(f"{path}: line {lineno}: sentences must be non-empty strings")
        boundaries = obj.get("boundaries", [])
        if not isinstance(boundaries, list):
            raise BridgeError(f"{path}: line {lineno}: boundaries must be a list")
        prev = -1
        for b in boundaries:
            if not isinstance(b, int) or isinstance(b, bool) or b <= prev or b > len(sentences) - 2:
                raise BridgeError(
                    f"{path}: line {lineno}: boundaries must be strictly increasing "
                    f"gap indices in [0, {len(sentences) - 2}]"
                )
            prev = b
        group = obj.get("group")
        if group is not None and not isinstance(group, str):
            raise BridgeError(f"{path}: line {lineno}: group must be a string or null")
        date = obj.get("date")
        if date is not None and not isinstance(date, str):
            raise BridgeError(f"{path}: line {lineno}: date must be a string or null")
        docs.append(
            CorpusDoc(
                doc_id=doc_id,
                sentences=tuple(sentences),
                boundaries=tuple(boundaries),
                group=group,
                date=date,
            )
        )
    return docs


def write_probs(records: Iterable[GapProbability], path: str | Path) -> None:
    """Write gap probabilities as JSONL in the toolkit's format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            if not 0.0 <= rec.p_not_next <= 1.0:
                raise BridgeError(
                    f"probability {rec.p_not_next!r} for doc {rec.doc_id!r} "
                    f"gap {rec.gap_index} outside [0, 1]"
                )
            fh.write(
                json.dumps(
                    {
                        "doc_id": rec.doc_id,
                        "gap_index": rec.gap_index,
                        "p_not_next": rec.p_not_next,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
