"""Boundary inference and near-miss-tolerant F1.

Gap convention matches the wire formats: gap i sits between sentences
i and i+1, so a document with n sentences has gaps 0..n-2.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence


def infer_boundaries(gap_probs: Sequence[float], tau: float) -> tuple[int, ...]:
    """Gap indices whose P(not_next) strictly exceeds tau."""
    return tuple(i for i, p in enumerate(gap_probs) if p > tau)


def _match_counts(ref: Sequence[int], hyp: Sequence[int], window: int) -> tuple[int, int]:
    """(exact, transposed) under min-cost matching with unmatched cost = window.

    Monotone DP over both sorted lists; pairs farther apart than the
    window never match.  Ties at equal cost prefer exact matches, then
    transpositions.  At window 2 no optimal matching crosses, so this
    equals the unrestricted assignment optimum.
    """
    r = sorted(ref)
    h = sorted(hyp)
    a, b = len(r), len(h)
    worst = (a + b + 1) * window
    # dp[j] = best (cost, -exact, -transposed) for r[:i], h[:j]
    dp = [(window * j, 0, 0) for j in range(b + 1)]
    for i in range(1, a + 1):
        prev = dp
        dp = [(prev[0][0] + window, prev[0][1], prev[0][2])]
        for j in range(1, b + 1):
            best = min(
                (prev[j][0] + window, prev[j][1], prev[j][2]),
                (dp[j - 1][0] + window, dp[j - 1][1], dp[j - 1][2]),
            )
            off = abs(r[i - 1] - h[j - 1])
            if off < window:
                c, e, t = prev[j - 1]
                cand = (c + off, e - 1, t) if off == 0 else (c + off, e, t - 1)
                best = min(best, cand)
            else:
                cand = (worst, 0, 0)
            dp.append(best)
    _, neg_exact, neg_transp = dp[b]
    return -neg_exact, -neg_transp


def boundary_f1(ref: Iterable[int], hyp: Iterable[int], window: int = 2) -> float:
    """F1 where a hypothesis gap within the window counts as a hit.

    Both sets empty scores 1.0; exactly one empty scores 0.0.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    r = sorted(set(ref))
    h = sorted(set(hyp))
    if not r and not h:
        return 1.0
    if not r or not h:
        return 0.0
    exact, transposed = _match_counts(r, h, window)
    tp = exact + transposed
    precision = tp / len(h)
    recall = tp / len(r)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def macro_boundary_f1(
    pairs: Iterable[tuple[Iterable[int], Iterable[int]]],
    window: int = 2,
) -> float:
    """Unweighted mean of per-document boundary F1."""
    scores = [boundary_f1(ref, hyp, window) for ref, hyp in pairs]
    if not scores:
        raise ValueError("no documents to score")
    return sum(scores) / len(scores)
