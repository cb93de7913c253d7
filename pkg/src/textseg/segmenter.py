"""Turn per-gap boundary probabilities into segmentations.

A gap becomes a boundary exactly when its probability strictly exceeds
the decision threshold; equality never places a boundary, so raising
the threshold can only shrink the predicted set.  The threshold is
tuned on validation documents by sweeping a fixed grid and keeping the
value with the best macro boundary F1, breaking ties toward 0.5 and
then downward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import Document, Segmentation, ValidationError, boundaries_to_masses
from .metrics import MetricConfig, macro_average, score_document
from .scorer import ProbabilityRecord

DEFAULT_TAU = 0.5
DEFAULT_GRID = tuple(round(i / 100, 2) for i in range(5, 96))


@dataclass(frozen=True)
class SegmenterConfig:
    """Decision threshold and the sweep grid used to tune it."""

    tau: float = DEFAULT_TAU
    grid: tuple[float, ...] = field(default=DEFAULT_GRID)

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", tuple(self.grid))
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError(f"tau {self.tau!r} outside [0, 1]")
        if not self.grid:
            raise ValidationError("threshold grid must be non-empty")
        for t in self.grid:
            if not 0.0 <= t <= 1.0:
                raise ValidationError(f"grid value {t!r} outside [0, 1]")


def infer_boundaries(
    records: Sequence[ProbabilityRecord],
    tau: float,
    n: int | None = None,
) -> set[int]:
    """Gaps whose boundary probability strictly exceeds tau.

    When n is given, the records must cover gaps 0..n-2 exactly once in
    order.
    """
    if n is not None:
        gaps = [r.gap_index for r in records]
        if gaps != list(range(n - 1)):
            raise ValidationError(
                f"probability records cover gaps {gaps}, expected 0..{n - 2}"
            )
    return {r.gap_index for r in records if r.p_not_next > tau}


def segment_document(
    doc: Document,
    records: Sequence[ProbabilityRecord],
    tau: float = DEFAULT_TAU,
) -> Segmentation:
    """Threshold the document's gap probabilities into segment masses."""
    if doc.n == 1:
        return Segmentation((1,))
    boundaries = infer_boundaries(records, tau, n=doc.n)
    return boundaries_to_masses(boundaries, doc.n)


@dataclass(frozen=True)
class SweepRow:
    """Validation metrics at one threshold value."""

    tau: float
    macro_bf1: float
    macro_pk: float
    macro_wd: float
    mean_boundaries_per_doc: float


def tune_threshold(
    val_docs: Sequence[Document],
    probs_by_doc: Mapping[str, Sequence[ProbabilityRecord]],
    cfg: SegmenterConfig | None = None,
    metric_cfg: MetricConfig | None = None,
) -> tuple[float, list[SweepRow]]:
    """Sweep the grid and pick the threshold with the best macro B-F1.

    Ties prefer the value nearest 0.5, then the smaller threshold.  The
    full sweep table is returned for reporting.  Every validation
    document must be fully covered by probability records.
    """
    if not val_docs:
        raise ValidationError("threshold tuning requires a non-empty validation set")
    cfg = cfg or SegmenterConfig()
    doc_records: list[tuple[Document, Sequence[ProbabilityRecord]]] = []
    for doc in val_docs:
        records = probs_by_doc.get(doc.doc_id)
        if records is None and doc.n == 1:
            records = []
        if records is None:
            raise ValidationError(f"no probabilities for validation document {doc.doc_id!r}")
        doc_records.append((doc, records))

    rows: list[SweepRow] = []
    for tau in cfg.grid:
        scores = []
        total_boundaries = 0
        for doc, records in doc_records:
            if doc.n == 1:
                hyp: set[int] = set()
            else:
                hyp = infer_boundaries(records, tau, n=doc.n)
            total_boundaries += len(hyp)
            scores.append(
                score_document(doc.doc_id, doc.boundaries, hyp, doc.n, cfg=metric_cfg)
            )
        macro = macro_average(scores)
        rows.append(
            SweepRow(
                tau=tau,
                macro_bf1=macro.bf1,
                macro_pk=macro.pk,
                macro_wd=macro.wd,
                mean_boundaries_per_doc=total_boundaries / len(doc_records),
            )
        )
    best = min(rows, key=lambda r: (-r.macro_bf1, abs(r.tau - 0.5), r.tau))
    return best.tau, rows
