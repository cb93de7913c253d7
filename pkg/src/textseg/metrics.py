"""Segmentation quality metrics over boundary gap indices.

All functions take reference and hypothesis boundaries as collections of
gap indices for a document of n sentences (gap i lies between sentences
i and i+1).  Provided metrics:

* p_k: probability that two sentences k apart are classified
  differently (same segment vs not) by reference and hypothesis.
* window_diff: fraction of length-k gap windows where the number of
  boundaries disagrees.
* match_boundaries: minimum-cost alignment of boundary sets allowing
  near-miss matches within a transposition window.
* boundary_f1 / boundary_similarity: alignment-based scores giving full
  or partial credit to near misses.

p_k and window_diff are undefined when the probe span k reaches the
document length; such documents are flagged skipped and excluded from
macro averages.
"""

from __future__ import annotations

import bisect
import functools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import Segmentation, masses_to_boundaries

DEFAULT_TRANSPOSITION_WINDOW = 2


@dataclass(frozen=True)
class MetricConfig:
    """Evaluation knobs: near-miss window and optional fixed probe span."""

    n_t: int = DEFAULT_TRANSPOSITION_WINDOW
    k_override: int | None = None

    def __post_init__(self) -> None:
        if self.n_t < 1:
            raise ValueError("transposition window must be >= 1")
        if self.k_override is not None and self.k_override < 1:
            raise ValueError("k_override must be >= 1")


def compute_k(n: int, num_ref_segments: int) -> int:
    """Probe span: half the mean reference segment length, at least 2.

    Rounds half away from zero, via integer arithmetic so no float
    artifacts appear: round(n / (2m)) == (n + m) // (2m) for positive
    integers.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if num_ref_segments < 1:
        raise ValueError("segment count must be >= 1")
    m = num_ref_segments
    return max(2, (n + m) // (2 * m))


def _prefix_counts(boundaries: Iterable[int], n: int) -> list[int]:
    """pre[g] = number of boundary gaps with index < g, for g in 0..n-1."""
    marks = [0] * (n - 1) if n > 1 else []
    for b in boundaries:
        if not 0 <= b <= n - 2:
            raise ValueError(f"boundary {b} out of range for {n} sentences")
        marks[b] = 1
    pre = [0] * n
    for g in range(1, n):
        pre[g] = pre[g - 1] + marks[g - 1]
    return pre


@dataclass(frozen=True)
class WindowScore:
    """Metric value plus the probe span used; skipped when k >= n."""

    value: float
    k: int
    skipped: bool


def p_k(
    ref: Iterable[int],
    hyp: Iterable[int],
    n: int,
    k: int | None = None,
) -> WindowScore:
    """Window disagreement rate over probes (i, i+k), i = 0..n-k-1.

    A probe disagrees when reference and hypothesis differ on whether
    sentences i and i+k share a segment.  Lower is better; 0 means the
    segmentations agree on every probe.
    """
    ref = sorted(set(ref))
    if k is None:
        k = compute_k(n, len(ref) + 1)
    if k >= n:
        return WindowScore(0.0, k, True)
    pre_r = _prefix_counts(ref, n)
    pre_h = _prefix_counts(hyp, n)
    disagree = 0
    for i in range(n - k):
        # Sentences i and i+k share a segment iff no boundary occupies
        # gaps i..i+k-1.
        same_r = pre_r[i + k] == pre_r[i]
        same_h = pre_h[i + k] == pre_h[i]
        if same_r != same_h:
            disagree += 1
    return WindowScore(disagree / (n - k), k, False)


def window_diff(
    ref: Iterable[int],
    hyp: Iterable[int],
    n: int,
    k: int | None = None,
) -> WindowScore:
    """Fraction of gap windows [i, i+k-1] whose boundary counts differ."""
    ref = sorted(set(ref))
    if k is None:
        k = compute_k(n, len(ref) + 1)
    if k >= n:
        return WindowScore(0.0, k, True)
    pre_r = _prefix_counts(ref, n)
    pre_h = _prefix_counts(hyp, n)
    differ = 0
    for i in range(n - k):
        count_r = pre_r[i + k] - pre_r[i]
        count_h = pre_h[i + k] - pre_h[i]
        if count_r != count_h:
            differ += 1
    return WindowScore(differ / (n - k), k, False)


@dataclass(frozen=True)
class MatchResult:
    """Minimum-cost alignment between reference and hypothesis boundaries.

    pairs holds (ref_gap, hyp_gap) matches ordered by ref_gap; exact
    matches have zero offset, transpositions an absolute offset below
    the window.  scaled_cost is the edit cost multiplied by the window
    so it stays an exact integer: offset per transposition, window per
    unmatched boundary.
    """

    pairs: tuple[tuple[int, int], ...]
    n_exact: int
    n_transposed: int
    misses: tuple[int, ...]
    false_alarms: tuple[int, ...]
    scaled_cost: int
    window: int

    @property
    def cost(self) -> float:
        return self.scaled_cost / self.window


def match_boundaries(
    ref: Iterable[int],
    hyp: Iterable[int],
    window: int = DEFAULT_TRANSPOSITION_WINDOW,
) -> MatchResult:
    """Align two boundary sets at minimum edit cost.

    Costs: exact match 0, transposition |offset| / window for
    0 < |offset| < window, unmatched boundary 1.  Ties prefer more
    exact matches, then more transpositions, then the lexicographically
    smallest pair list.  The search covers every one-to-one assignment,
    crossing ones included: crossings never lower the cost, but they
    can win a tie-break (e.g. trading one far transposition for an
    extra exact match elsewhere).  A hypothesis gap more than window-1
    below the current reference gap can never be matched later, so it
    is settled as the frontier passes it; that keeps the live state to
    at most 2*window - 1 hypothesis gaps.
    """
    if window < 1:
        raise ValueError("transposition window must be >= 1")
    r = sorted(set(ref))
    h = sorted(set(hyp))
    a, b = len(r), len(h)

    # drop[i] = first hyp index still reachable from r[i:]; the slice
    # [drop[i], drop[i+1]) falls behind the frontier on the step i -> i+1
    # and any unmatched gap in it is charged as a false alarm then.
    drop = [bisect.bisect_left(h, r[i] - (window - 1)) for i in range(a)]
    drop.append(b)

    # solve(i, used) = best (scaled_cost, -n_exact, -n_transposed, pairs)
    # over r[i:], where `used` holds already-matched hyp indices at or
    # past drop[i].  min() applies every tie-break in order; comparing
    # pair-list suffixes is comparing whole pairings because all options
    # at a state share the prefix.
    @functools.cache
    def solve(i: int, used: frozenset[int]) -> tuple[int, int, int, tuple[tuple[int, int], ...]]:
        if i == a:
            return (0, 0, 0, ())

        def step(j: int | None) -> tuple[int, int, int, tuple[tuple[int, int], ...]]:
            if j is None:
                cost, taken = window, used
            else:
                cost, taken = abs(r[i] - h[j]), used | {j}
            cost += window * sum(1 for x in range(drop[i], drop[i + 1]) if x not in taken)
            c, e, t, p = solve(i + 1, frozenset(x for x in taken if x >= drop[i + 1]))
            if j is None:
                return (c + cost, e, t, p)
            if r[i] == h[j]:
                return (c + cost, e - 1, t, ((r[i], h[j]),) + p)
            return (c + cost, e, t - 1, ((r[i], h[j]),) + p)

        options = [step(None)]
        hi = bisect.bisect_right(h, r[i] + (window - 1))
        options.extend(step(j) for j in range(drop[i], hi) if j not in used)
        return min(options)

    lead_fa = drop[0] if a else b  # hyp gaps no reference can ever reach
    cost, neg_exact, neg_transp, pairs = solve(0, frozenset())
    solve.cache_clear()
    cost += window * lead_fa
    matched_r = {p[0] for p in pairs}
    matched_h = {p[1] for p in pairs}
    return MatchResult(
        pairs=pairs,
        n_exact=-neg_exact,
        n_transposed=-neg_transp,
        misses=tuple(x for x in r if x not in matched_r),
        false_alarms=tuple(x for x in h if x not in matched_h),
        scaled_cost=cost,
        window=window,
    )


@dataclass(frozen=True)
class PrecisionRecallF1:
    precision: float
    recall: float
    f1: float


def boundary_prf(
    ref: Iterable[int],
    hyp: Iterable[int],
    window: int = DEFAULT_TRANSPOSITION_WINDOW,
) -> PrecisionRecallF1:
    """Precision/recall/F1 over aligned boundaries; transpositions count
    as full credit.

    Both sets empty scores 1.0 everywhere (nothing to find, nothing
    claimed); exactly one empty scores 0.0 with the undefined ratio set
    to 0.
    """
    r = sorted(set(ref))
    h = sorted(set(hyp))
    if not r and not h:
        return PrecisionRecallF1(1.0, 1.0, 1.0)
    if not r or not h:
        return PrecisionRecallF1(0.0, 0.0, 0.0)
    m = match_boundaries(r, h, window)
    tp = m.n_exact + m.n_transposed
    precision = tp / len(h)
    recall = tp / len(r)
    if precision + recall == 0.0:
        return PrecisionRecallF1(precision, recall, 0.0)
    return PrecisionRecallF1(
        precision, recall, 2.0 * precision * recall / (precision + recall)
    )


def boundary_f1(
    ref: Iterable[int],
    hyp: Iterable[int],
    window: int = DEFAULT_TRANSPOSITION_WINDOW,
) -> float:
    """The F1 component of :func:`boundary_prf`."""
    return boundary_prf(ref, hyp, window).f1


def boundary_similarity(
    ref: Iterable[int],
    hyp: Iterable[int],
    window: int = DEFAULT_TRANSPOSITION_WINDOW,
) -> float:
    """1 minus normalized edit cost over all aligned or unmatched boundaries.

    Transpositions earn partial credit (1 - offset/window); misses and
    false alarms cost 1 each.  Both sets empty scores 1.0.
    """
    m = match_boundaries(ref, hyp, window)
    total = m.n_exact + m.n_transposed + len(m.misses) + len(m.false_alarms)
    if total == 0:
        return 1.0
    transposition_penalty = sum(abs(rg - hg) for rg, hg in m.pairs) / m.window
    penalty = len(m.misses) + len(m.false_alarms) + transposition_penalty
    return 1.0 - penalty / total


@dataclass(frozen=True)
class DocScores:
    """All metrics for a single document."""

    doc_id: str
    group: str | None
    n: int
    ref: tuple[int, ...]
    hyp: tuple[int, ...]
    k: int
    pk: float
    wd: float
    pk_wd_skipped: bool
    bf1: float
    b: float


def score_document(
    doc_id: str,
    ref: Iterable[int],
    hyp: Iterable[int],
    n: int,
    group: str | None = None,
    cfg: MetricConfig | None = None,
) -> DocScores:
    """Compute every metric for one document against its reference."""
    cfg = cfg or MetricConfig()
    ref_t = tuple(sorted(set(ref)))
    hyp_t = tuple(sorted(set(hyp)))
    pk_score = p_k(ref_t, hyp_t, n, k=cfg.k_override)
    wd_score = window_diff(ref_t, hyp_t, n, k=pk_score.k)
    return DocScores(
        doc_id=doc_id,
        group=group,
        n=n,
        ref=ref_t,
        hyp=hyp_t,
        k=pk_score.k,
        pk=pk_score.value,
        wd=wd_score.value,
        pk_wd_skipped=pk_score.skipped,
        bf1=boundary_f1(ref_t, hyp_t, cfg.n_t),
        b=boundary_similarity(ref_t, hyp_t, cfg.n_t),
    )


@dataclass(frozen=True)
class MacroScores:
    """Unweighted per-document means.

    pk and wd average only documents whose probe span fits (skipped docs
    are excluded); their doc counts are reported separately.  With no
    eligible documents the mean is reported as 0.0.
    """

    pk: float
    wd: float
    bf1: float
    b: float
    n_docs: int
    n_docs_pk_wd: int


def macro_average(scores: Sequence[DocScores]) -> MacroScores:
    if not scores:
        raise ValueError("no documents to average")
    eligible = [s for s in scores if not s.pk_wd_skipped]
    n_pw = len(eligible)
    return MacroScores(
        pk=sum(s.pk for s in eligible) / n_pw if n_pw else 0.0,
        wd=sum(s.wd for s in eligible) / n_pw if n_pw else 0.0,
        bf1=sum(s.bf1 for s in scores) / len(scores),
        b=sum(s.b for s in scores) / len(scores),
        n_docs=len(scores),
        n_docs_pk_wd=n_pw,
    )


def compute_k_segments(ref: Segmentation) -> int:
    """Probe span from a reference segmentation's masses."""
    return compute_k(ref.n, ref.num_segments)


def _check_same_n(ref: Segmentation, hyp: Segmentation) -> int:
    if ref.n != hyp.n:
        raise ValueError(f"segmentations cover {ref.n} vs {hyp.n} sentences")
    return ref.n


def pk_segments(ref: Segmentation, hyp: Segmentation, k: int | None = None) -> float:
    """p_k over the mass view; raises when k falls outside [1, n)."""
    n = _check_same_n(ref, hyp)
    if k is None:
        k = compute_k_segments(ref)
    if not 1 <= k < n:
        raise ValueError(f"k={k} out of range for {n} sentences")
    return p_k(masses_to_boundaries(ref), masses_to_boundaries(hyp), n, k).value


def window_diff_segments(ref: Segmentation, hyp: Segmentation, k: int | None = None) -> float:
    """window_diff over the mass view; raises when k falls outside [1, n)."""
    n = _check_same_n(ref, hyp)
    if k is None:
        k = compute_k_segments(ref)
    if not 1 <= k < n:
        raise ValueError(f"k={k} out of range for {n} sentences")
    return window_diff(masses_to_boundaries(ref), masses_to_boundaries(hyp), n, k).value


def evaluate_document(
    doc_id: str,
    ref: Segmentation,
    hyp: Segmentation,
    cfg: MetricConfig | None = None,
    group: str | None = None,
) -> DocScores:
    """All metrics for a reference/hypothesis segmentation pair."""
    cfg = cfg or MetricConfig()
    n = _check_same_n(ref, hyp)
    ref_b = tuple(sorted(masses_to_boundaries(ref)))
    hyp_b = tuple(sorted(masses_to_boundaries(hyp)))
    k = cfg.k_override if cfg.k_override is not None else compute_k_segments(ref)
    pk_score = p_k(ref_b, hyp_b, n, k)
    wd_score = window_diff(ref_b, hyp_b, n, k)
    return DocScores(
        doc_id=doc_id,
        group=group,
        n=n,
        ref=ref_b,
        hyp=hyp_b,
        k=k,
        pk=pk_score.value,
        wd=wd_score.value,
        pk_wd_skipped=pk_score.skipped,
        bf1=boundary_f1(ref_b, hyp_b, cfg.n_t),
        b=boundary_similarity(ref_b, hyp_b, cfg.n_t),
    )


def score_corpus(
    refs: Mapping[str, tuple[Iterable[int], int, str | None]],
    hyps: Mapping[str, Iterable[int]],
    cfg: MetricConfig | None = None,
) -> list[DocScores]:
    """Score every document, ordered by doc_id for stable reports.

    refs maps doc_id -> (boundaries, n, group); hyps maps doc_id to
    predicted boundaries (missing ids count as predicting none).
    """
    out = []
    for doc_id in sorted(refs):
        ref, n, group = refs[doc_id]
        hyp = hyps.get(doc_id, ())
        out.append(score_document(doc_id, ref, hyp, n, group=group, cfg=cfg))
    return out
