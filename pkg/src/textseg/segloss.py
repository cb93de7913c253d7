"""Segmentation-aware training loss over sentence-pair probabilities.

Three averaged terms over a batch of pair predictions:

  total = mean(focal) + conf_weight * mean(conf) + boundary_weight * mean(bound)

* focal: class-weighted focal cross entropy, down-weighting easy pairs.
* conf: squared hinge on the probability mass assigned to the wrong
  class beyond a margin, discouraging confident mistakes.
* bound: cross entropy scaled by exp(-dist/sigma), where dist is the
  gap's distance to the nearest true boundary.  Pairs with infinite
  distance (hard negatives, or documents without boundaries) get zero
  weight.

Probabilities are clamped to [prob_floor, 1 - prob_floor] before any
logarithm.  The analytic gradient is taken with respect to logits z with
p = sigmoid(z), for use by gradient-descent trainers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LossConfig:
    """Weights and shape constants for the pairwise segmentation loss."""

    focal_gamma: float = 1.5
    focal_alpha: float = 0.8
    conf_weight: float = 0.15
    conf_margin: float = 0.5
    boundary_weight: float = 0.2
    boundary_sigma: float = 2.0
    prob_floor: float = 1e-7


@dataclass(frozen=True)
class LossBatch:
    """Per-pair model outputs and targets.

    probs: predicted boundary probability per pair.
    labels: 1 for a boundary pair, 0 for a continuation pair.
    dists: gap distance to the nearest true boundary (0 for boundary
        pairs, inf when the document has none or the pair is a hard
        negative).
    """

    probs: np.ndarray
    labels: np.ndarray
    dists: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        d = np.asarray(self.dists, dtype=np.float64)
        if not (p.shape == y.shape == d.shape) or p.ndim != 1 or p.size == 0:
            raise ValueError("probs, labels and dists must be equal-length 1-D arrays")
        if np.any((y != 0.0) & (y != 1.0)):
            raise ValueError("labels must be 0 or 1")
        if np.any(np.isnan(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("probs must lie in [0, 1]")
        if np.any(np.isnan(d)) or np.any(d < 0.0):
            raise ValueError("dists must be non-negative (inf allowed)")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "dists", d)


@dataclass(frozen=True)
class LossValue:
    """Total loss plus the mean of each component before weighting."""

    total: float
    focal: float
    conf: float
    bound: float


def _clamped_pt(batch: LossBatch, cfg: LossConfig) -> tuple[np.ndarray, np.ndarray]:
    p = np.clip(batch.probs, cfg.prob_floor, 1.0 - cfg.prob_floor)
    # Probability assigned to the correct class.
    p_t = np.where(batch.labels == 1.0, p, 1.0 - p)
    return p, p_t


def loss_terms(batch: LossBatch, cfg: LossConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pair (focal, conf, bound) vectors before averaging or weighting."""
    _, p_t = _clamped_pt(batch, cfg)
    alpha_t = np.where(batch.labels == 1.0, cfg.focal_alpha, 1.0 - cfg.focal_alpha)
    log_pt = np.log(p_t)
    focal = -alpha_t * (1.0 - p_t) ** cfg.focal_gamma * log_pt
    over = np.maximum(0.0, (1.0 - p_t) - cfg.conf_margin)
    conf = over * over
    with np.errstate(over="ignore"):
        w = np.exp(-batch.dists / cfg.boundary_sigma)
    bound = w * (-log_pt)
    return focal, conf, bound


def seg_loss(batch: LossBatch, cfg: LossConfig | None = None) -> LossValue:
    """Batch loss: mean focal + conf_weight * mean conf + boundary_weight * mean bound."""
    cfg = cfg or LossConfig()
    focal, conf, bound = loss_terms(batch, cfg)
    f = float(np.mean(focal))
    c = float(np.mean(conf))
    b = float(np.mean(bound))
    return LossValue(
        total=f + cfg.conf_weight * c + cfg.boundary_weight * b,
        focal=f,
        conf=c,
        bound=b,
    )


def grad_wrt_probs(batch: LossBatch, cfg: LossConfig | None = None) -> np.ndarray:
    """d total / d p_i per pair, at the clamped probabilities."""
    cfg = cfg or LossConfig()
    _, p_t = _clamped_pt(batch, cfg)
    n = p_t.size
    alpha_t = np.where(batch.labels == 1.0, cfg.focal_alpha, 1.0 - cfg.focal_alpha)
    log_pt = np.log(p_t)
    one_m = 1.0 - p_t
    g = cfg.focal_gamma
    dfocal_dpt = alpha_t * g * one_m ** (g - 1.0) * log_pt - alpha_t * one_m**g / p_t
    dconf_dpt = -2.0 * np.maximum(0.0, one_m - cfg.conf_margin)
    with np.errstate(over="ignore"):
        w = np.exp(-batch.dists / cfg.boundary_sigma)
    dbound_dpt = -w / p_t
    dtotal_dpt = dfocal_dpt + cfg.conf_weight * dconf_dpt + cfg.boundary_weight * dbound_dpt
    # p_t = p for boundary pairs and 1 - p otherwise, so dp_t/dp = +/-1.
    sign = np.where(batch.labels == 1.0, 1.0, -1.0)
    return dtotal_dpt * sign / n


def seg_loss_grad_logits(
    logits: np.ndarray,
    labels: np.ndarray,
    dists: np.ndarray,
    cfg: LossConfig | None = None,
) -> tuple[LossValue, np.ndarray]:
    """Loss and d total / d z_i where p = sigmoid(z).

    The sigmoid chain factor p(1-p) uses the unclamped probability, so
    the gradient matches finite differences wherever the clamp is
    inactive.
    """
    cfg = cfg or LossConfig()
    z = np.asarray(logits, dtype=np.float64)
    p = sigmoid(z)
    batch = LossBatch(probs=p, labels=np.asarray(labels), dists=np.asarray(dists))
    value = seg_loss(batch, cfg)
    grad = grad_wrt_probs(batch, cfg) * p * (1.0 - p)
    return value, grad


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
