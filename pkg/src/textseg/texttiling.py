"""Lexical-cohesion segmentation baseline (block comparison).

Pipeline: case-folded tokens are chunked into fixed-width
pseudo-sentences; each pseudo-gap gets a cosine similarity between the
token-frequency vectors of the blocks on either side; the similarity
curve is smoothed; valley depths are measured by monotone ascent to the
nearest peak on each side; gaps deeper than mean - stddev/2 become
boundaries and are mapped back to the nearest real sentence gap.

The pipeline is fully deterministic.  Documents too short to form two
pseudo-sentences come back as a single segment.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass
from math import sqrt
from typing import Callable, Sequence

from .corpus import Document, Segmentation, ValidationError, boundaries_to_masses
from .scorer import tokenize

CUTOFF_MEAN_MINUS_HALF_SIGMA = "mean_minus_half_sigma"


@dataclass(frozen=True)
class TilingConfig:
    """Block-comparison parameters.

    w: pseudo-sentence size in tokens; k: block size in
    pseudo-sentences.  stopwords and stemmer are off by default to stay
    language-neutral.
    """

    w: int = 20
    k: int = 10
    smoothing_width: int = 2
    smoothing_rounds: int = 1
    cutoff_policy: str = CUTOFF_MEAN_MINUS_HALF_SIGMA
    stopwords: tuple[str, ...] = ()
    stemmer: Callable[[str], str] | None = None

    def __post_init__(self) -> None:
        if self.w < 1 or self.k < 1:
            raise ValidationError("pseudo-sentence and block sizes must be >= 1")
        if self.smoothing_width < 0 or self.smoothing_rounds < 0:
            raise ValidationError("smoothing parameters must be non-negative")
        if self.cutoff_policy != CUTOFF_MEAN_MINUS_HALF_SIGMA:
            raise ValidationError(f"unknown cutoff policy {self.cutoff_policy!r}")


def _doc_tokens(doc: Document, cfg: TilingConfig) -> list[list[str]]:
    drop = set(cfg.stopwords)
    out = []
    for sent in doc.sentences:
        toks = [t for t in tokenize(sent) if t not in drop]
        if cfg.stemmer is not None:
            toks = [cfg.stemmer(t) for t in toks]
        out.append(toks)
    return out


def to_pseudosentences(
    doc: Document, w: int, cfg: TilingConfig | None = None
) -> tuple[list[list[str]], list[int]] | None:
    """Chunk the document's token stream into w-token pseudo-sentences.

    Returns (chunks, gap_map) where gap_map sends each pseudo-gap to
    the nearest real sentence gap by cumulative token offset (ties go
    to the smaller gap index).  The trailing remainder merges into the
    last chunk.  Documents with fewer than 2w tokens are unsegmentable:
    returns None.
    """
    cfg = cfg or TilingConfig(w=w)
    per_sentence = _doc_tokens(doc, cfg)
    stream: list[str] = [t for toks in per_sentence for t in toks]
    total = len(stream)
    if total < 2 * w:
        return None
    num_chunks = total // w
    chunks = [stream[i * w : (i + 1) * w] for i in range(num_chunks - 1)]
    chunks.append(stream[(num_chunks - 1) * w :])

    # Cumulative token count through sentence j = offset of real gap j.
    gap_offsets: list[int] = []
    running = 0
    for toks in per_sentence[:-1]:
        running += len(toks)
        gap_offsets.append(running)
    gap_map: list[int] = []
    for g in range(num_chunks - 1):
        offset = (g + 1) * w
        nearest = min(
            range(len(gap_offsets)), key=lambda j: (abs(gap_offsets[j] - offset), j)
        )
        gap_map.append(nearest)
    return chunks, gap_map


def gap_similarities(chunks: Sequence[Sequence[str]], k: int) -> list[float]:
    """Cosine similarity between the k-chunk blocks flanking each pseudo-gap.

    Blocks are truncated at document edges.
    """
    if len(chunks) < 2:
        return []
    counters = [Counter(c) for c in chunks]
    scores = []
    for g in range(len(chunks) - 1):
        left: Counter[str] = Counter()
        for c in counters[max(0, g - k + 1) : g + 1]:
            left.update(c)
        right: Counter[str] = Counter()
        for c in counters[g + 1 : min(len(chunks), g + 1 + k)]:
            right.update(c)
        scores.append(_cosine(left, right))
    return scores


def _cosine(a: Counter, b: Counter) -> float:
    dot = sum(a[t] * b[t] for t in a.keys() & b.keys())
    if dot == 0:
        return 0.0
    na = sum(v * v for v in a.values())
    nb = sum(v * v for v in b.values())
    return dot / sqrt(na * nb)


def smooth(scores: Sequence[float], width: int, rounds: int) -> list[float]:
    """Edge-truncated moving average of window 2*width+1, repeated."""
    out = list(scores)
    if width < 1:
        return out
    for _ in range(rounds):
        out = [
            statistics.fmean(out[max(0, i - width) : i + width + 1])
            for i in range(len(out))
        ]
    return out


def depth_scores(scores: Sequence[float]) -> list[float]:
    """Valley depth per gap: rise to the nearest peak on each side.

    The peak is reached by walking outward while values never decrease;
    depth = (left_peak - s) + (right_peak - s), always >= 0.
    """
    depths = []
    for g, s in enumerate(scores):
        j = g
        while j > 0 and scores[j - 1] >= scores[j]:
            j -= 1
        lpeak = scores[j]
        j = g
        while j < len(scores) - 1 and scores[j + 1] >= scores[j]:
            j += 1
        rpeak = scores[j]
        depths.append((lpeak - s) + (rpeak - s))
    return depths


def select_boundaries(
    depths: Sequence[float],
    gap_map: Sequence[int],
    policy: str = CUTOFF_MEAN_MINUS_HALF_SIGMA,
) -> set[int]:
    """Pseudo-gaps deeper than mean - stddev/2 (population stddev,
    strict >), mapped to real sentence gaps; duplicates collapse."""
    if policy != CUTOFF_MEAN_MINUS_HALF_SIGMA:
        raise ValidationError(f"unknown cutoff policy {policy!r}")
    if not depths:
        return set()
    cutoff = statistics.fmean(depths) - statistics.pstdev(depths) / 2.0
    return {gap_map[g] for g, d in enumerate(depths) if d > cutoff}


def texttiling_boundaries(doc: Document, cfg: TilingConfig | None = None) -> set[int]:
    """Predicted sentence-gap boundaries; empty for unsegmentable docs."""
    cfg = cfg or TilingConfig()
    chunked = to_pseudosentences(doc, cfg.w, cfg)
    if chunked is None:
        return set()
    chunks, gap_map = chunked
    sims = gap_similarities(chunks, cfg.k)
    if not sims:
        return set()
    smoothed = smooth(sims, cfg.smoothing_width, cfg.smoothing_rounds)
    depths = depth_scores(smoothed)
    return select_boundaries(depths, gap_map, cfg.cutoff_policy)


def texttiling_segment(doc: Document, cfg: TilingConfig | None = None) -> Segmentation:
    """Full pipeline; unsegmentable documents become one segment."""
    return boundaries_to_masses(texttiling_boundaries(doc, cfg), doc.n)
