"""Document data model, corpus ingestion, and dataset splitting.

A document is an ordered list of sentences plus a set of gap indices
marking segment boundaries.  Gap i sits between sentences[i] and
sentences[i+1], so a document with n sentences has n-1 gaps and valid
boundaries form a subset of {0, ..., n-2}.  The equivalent mass view
(segment lengths) is held by Segmentation; the two representations
round-trip exactly.
"""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence


class ValidationError(ValueError):
    """Raised when input data violates a documented invariant."""


@dataclass(frozen=True)
class Document:
    """Ordered sentences plus gold boundary gap indices and metadata."""

    doc_id: str
    sentences: tuple[str, ...]
    boundaries: tuple[int, ...] = ()
    group: str | None = None
    date: dt.date | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        if not self.doc_id:
            raise ValidationError("document requires a non-empty doc_id")
        if len(self.sentences) < 1:
            raise ValidationError(f"{self.doc_id}: document needs at least one sentence")
        for idx, sent in enumerate(self.sentences):
            if not isinstance(sent, str) or not sent.strip():
                raise ValidationError(f"{self.doc_id}: sentence {idx} is empty")
        n = len(self.sentences)
        prev = -1
        for b in self.boundaries:
            if not isinstance(b, int) or isinstance(b, bool):
                raise ValidationError(f"{self.doc_id}: boundary {b!r} is not an integer")
            if b <= prev:
                raise ValidationError(f"{self.doc_id}: boundaries must be strictly increasing")
            if not 0 <= b <= n - 2:
                raise ValidationError(
                    f"{self.doc_id}: boundary {b} out of range for {n} sentences"
                )
            prev = b

    @property
    def n(self) -> int:
        """Number of sentences."""
        return len(self.sentences)

    @property
    def num_gaps(self) -> int:
        return len(self.sentences) - 1

    @property
    def boundary_set(self) -> frozenset[int]:
        return frozenset(self.boundaries)

    @property
    def segment_count(self) -> int:
        return len(self.boundaries) + 1


@dataclass(frozen=True)
class Segmentation:
    """Segment lengths (masses); sums to the document's sentence count."""

    masses: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "masses", tuple(self.masses))
        if len(self.masses) == 0:
            raise ValidationError("segmentation needs at least one segment")
        for m in self.masses:
            if not isinstance(m, int) or isinstance(m, bool) or m < 1:
                raise ValidationError(f"segment mass {m!r} must be a positive integer")

    @property
    def n(self) -> int:
        """Total number of sentences covered."""
        return sum(self.masses)

    @property
    def num_segments(self) -> int:
        return len(self.masses)


@dataclass(frozen=True)
class CorpusSplit:
    """Disjoint train/val/test doc_id lists covering a corpus."""

    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]


@dataclass(frozen=True)
class GroupFold:
    """One leave-one-group-out fold: train on all other groups."""

    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    held_out_group: str


def boundaries_to_masses(boundaries: Iterable[int], n: int) -> Segmentation:
    """Convert a gap-index boundary set into consecutive run lengths.

    ({2}, 6) -> [3, 3]; ({}, 4) -> [4].
    """
    if n < 1:
        raise ValidationError("sentence count must be >= 1")
    bs = sorted(set(boundaries))
    for b in bs:
        if not 0 <= b <= n - 2:
            raise ValidationError(f"boundary {b} out of range for {n} sentences")
    masses = []
    prev = -1
    for b in bs:
        masses.append(b - prev)
        prev = b
    masses.append(n - 1 - prev)
    return Segmentation(tuple(masses))


def masses_to_boundaries(seg: Segmentation) -> set[int]:
    """Exact inverse of :func:`boundaries_to_masses` (cumulative sums minus one)."""
    out: set[int] = set()
    total = 0
    for m in seg.masses[:-1]:
        total += m
        out.add(total - 1)
    return out


_TRAILING_TOKEN_RE = re.compile(r"\S+$")


def split_sentences(text: str, abbreviations: Sequence[str] = ()) -> list[str]:
    """Split raw text on '.', '!' or '?' followed by whitespace and an
    uppercase letter or digit.

    No split happens when the token ending at the punctuation (e.g. "Sr.")
    is in the abbreviation list.  Pieces are trimmed; empty pieces dropped.
    """
    abbrev = set(abbreviations)
    out: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in ".!?":
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            if j > i + 1 and j < n and (text[j].isupper() or text[j].isdigit()):
                m = _TRAILING_TOKEN_RE.search(text, 0, i + 1)
                token = m.group(0) if m else ""
                if token not in abbrev:
                    piece = text[start : i + 1].strip()
                    if piece:
                        out.append(piece)
                    start = j
                    i = j
                    continue
        i += 1
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


def load_abbreviations(lang: str) -> list[str]:
    """Abbreviation guard list shipped with the package ("en" or "pt")."""
    data = json.loads(
        resources.files("textseg").joinpath("data/abbreviations.json").read_text("utf-8")
    )
    if lang not in data:
        raise ValidationError(f"no abbreviation list for language {lang!r}")
    return list(data[lang])


def parse_corpus(path: str | Path, fmt: str = "jsonl") -> list[Document]:
    """Read a corpus file (one JSON object per line) into validated Documents.

    File order is preserved.  Malformed lines and invariant violations
    raise ValidationError naming the line number and doc_id.
    """
    if fmt != "jsonl":
        raise ValidationError(f"unsupported corpus format {fmt!r}")
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: malformed JSON ({exc})") from exc
            docs.append(_document_from_obj(obj, where=f"{path}: line {lineno}"))
            if docs[-1].doc_id in seen:
                raise ValidationError(f"{path}: line {lineno}: duplicate doc_id {docs[-1].doc_id!r}")
            seen.add(docs[-1].doc_id)
    return docs


def _document_from_obj(obj: object, where: str) -> Document:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected a JSON object")
    doc_id = obj.get("doc_id")
    if not isinstance(doc_id, str):
        raise ValidationError(f"{where}: doc_id must be a string")
    sentences = obj.get("sentences")
    if not isinstance(sentences, list):
        raise ValidationError(f"{where} ({doc_id}): sentences must be a list")
    boundaries = obj.get("boundaries", [])
    if not isinstance(boundaries, list):
        raise ValidationError(f"{where} ({doc_id}): boundaries must be a list")
    group = obj.get("group")
    if group is not None and not isinstance(group, str):
        raise ValidationError(f"{where} ({doc_id}): group must be a string or null")
    raw_date = obj.get("date")
    date = None
    if raw_date is not None:
        try:
            date = dt.date.fromisoformat(raw_date)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{where} ({doc_id}): bad date {raw_date!r}") from exc
    try:
        return Document(
            doc_id=doc_id,
            sentences=tuple(sentences),
            boundaries=tuple(sorted(boundaries)),
            group=group,
            date=date,
        )
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def document_to_obj(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "group": doc.group,
        "date": doc.date.isoformat() if doc.date else None,
        "sentences": list(doc.sentences),
        "boundaries": list(doc.boundaries),
    }


def write_corpus(docs: Iterable[Document], path: str | Path) -> None:
    """Write documents as corpus JSONL (UTF-8, LF line endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_obj(doc), ensure_ascii=False) + "\n")


def chronological_split(
    docs: Sequence[Document],
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
) -> CorpusSplit:
    """Date-ordered split; the most recent documents land in test.

    Documents are sorted ascending by (date, doc_id); the first
    floor(f_train * N) go to train, the next floor(f_val * N) to val and
    the remainder to test.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ValidationError("fractions must be three non-negative numbers")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError(f"fractions must sum to 1, got {sum(fractions)}")
    undated = [d.doc_id for d in docs if d.date is None]
    if undated:
        raise ValidationError(f"documents missing dates: {', '.join(sorted(undated))}")
    ordered = sorted(docs, key=lambda d: (d.date, d.doc_id))
    n = len(ordered)
    n_train = int(fractions[0] * n)
    n_val = int(fractions[1] * n)
    ids = [d.doc_id for d in ordered]
    return CorpusSplit(
        train=tuple(ids[:n_train]),
        val=tuple(ids[n_train : n_train + n_val]),
        test=tuple(ids[n_train + n_val :]),
    )


def group_folds(docs: Sequence[Document]) -> list[GroupFold]:
    """Leave-one-group-out folds, one per distinct group, ordered by group name."""
    ungrouped = [d.doc_id for d in docs if d.group is None]
    if ungrouped:
        raise ValidationError(f"documents missing groups: {', '.join(sorted(ungrouped))}")
    groups = sorted({d.group for d in docs})
    if len(groups) < 2:
        raise ValidationError(
            f"need at least two groups for leave-one-group-out folds, got {len(groups)} "
            "(training set would be empty)"
        )
    folds = []
    for g in groups:
        test_ids = tuple(d.doc_id for d in docs if d.group == g)
        train_ids = tuple(d.doc_id for d in docs if d.group != g)
        folds.append(GroupFold(train_ids=train_ids, test_ids=test_ids, held_out_group=g))
    return folds
