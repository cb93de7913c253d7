"""Segmentation-aware pairwise loss, torch edition.

Same composition as the linear toolkit's training loss: a focal term,
a squared penalty on confidently wrong predictions past a margin, and
a boundary-proximity weighted log term that contributes nothing at
infinite distance.  Computed in float64 so a shared probability batch
matches the toolkit's value to well under 1e-6.
"""

from __future__ import annotations

import torch

from .config import PairLossConfig


def pairwise_loss(
    probs: torch.Tensor,
    labels: torch.Tensor,
    dists: torch.Tensor,
    cfg: PairLossConfig | None = None,
) -> torch.Tensor:
    """Scalar loss for a batch of boundary probabilities.

    probs: P(not_next) per pair, any float dtype; labels: 0/1; dists:
    gap distance to the nearest true boundary, inf allowed.  Gradients
    flow through probs.
    """
    cfg = cfg or PairLossConfig()
    if probs.ndim != 1 or probs.shape != labels.shape or probs.shape != dists.shape:
        raise ValueError("probs, labels and dists must be equal-length 1-D tensors")
    if probs.numel() == 0:
        raise ValueError("empty batch")
    p = probs.double().clamp(cfg.prob_floor, 1.0 - cfg.prob_floor)
    y = labels.double()
    d = dists.double()
    p_t = torch.where(y > 0.5, p, 1.0 - p)
    alpha_t = torch.where(y > 0.5, torch.full_like(p, cfg.focal_alpha), torch.full_like(p, 1.0 - cfg.focal_alpha))
    log_pt = torch.log(p_t)
    focal = -alpha_t * (1.0 - p_t) ** cfg.focal_gamma * log_pt
    conf = torch.clamp((1.0 - p_t) - cfg.conf_margin, min=0.0) ** 2
    # exp(-inf) is exactly 0, so hard negatives drop out of this term
    bound = torch.exp(-d / cfg.boundary_sigma) * -log_pt
    return focal.mean() + cfg.conf_weight * conf.mean() + cfg.boundary_weight * bound.mean()


def loss_from_logits(
    logits: torch.Tensor,
    labels: torch.Tensor,
    dists: torch.Tensor,
    cfg: PairLossConfig | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Loss and P(not_next) from two-class head logits.

    Column 0 scores is_next, column 1 not_next; softmax over the two.
    """
    if logits.ndim != 2 or logits.shape[1] != 2:
        raise ValueError("logits must have shape (batch, 2)")
    p_not_next = torch.softmax(logits, dim=1)[:, 1]
    return pairwise_loss(p_not_next, labels, dists, cfg), p_not_next
