"""The torch loss must agree with the linear toolkit's loss to 1e-6."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
import torch

from textseg import pairgen as ts_pairgen
from textseg import segloss as ts_segloss

from hfbridge import PairLossConfig, loss_from_logits, pairwise_loss, read_pairs


def toolkit_total(p, y, d, cfg=None) -> float:
    batch = ts_segloss.LossBatch(
        np.asarray(p, dtype=float), np.asarray(y, dtype=float), np.asarray(d, dtype=float)
    )
    return ts_segloss.seg_loss(batch, cfg).total


def as_tensors(p, y, d):
    return (
        torch.tensor(np.asarray(p), dtype=torch.float64),
        torch.tensor(np.asarray(y), dtype=torch.float64),
        torch.tensor(np.asarray(d), dtype=torch.float64),
    )


class TestParityWithToolkit:
    @pytest.mark.parametrize("seed", range(8))
    def test_random_batches(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 64))
        p = rng.random(n)
        p[rng.random(n) < 0.1] = 0.0
        p[rng.random(n) < 0.1] = 1.0
        y = rng.integers(0, 2, n).astype(float)
        d = rng.integers(0, 7, n).astype(float)
        d[y == 1] = 0.0
        d[rng.random(n) < 0.3] = math.inf
        ours = pairwise_loss(*as_tensors(p, y, d)).item()
        assert abs(ours - toolkit_total(p, y, d)) <= 1e-6

    def test_real_pairs_file(self, wire_dir):
        """Same probabilities, labels and distances read by each package
        from the same pairs file give the same loss."""
        path = wire_dir / "pairs_all.jsonl"
        ours = read_pairs(path)
        theirs = ts_pairgen.read_pairs(path)
        rng = np.random.default_rng(99)
        p = rng.random(len(ours))
        bridge = pairwise_loss(
            *as_tensors(p, [x.label for x in ours], [x.dist for x in ours])
        ).item()
        toolkit = toolkit_total(
            p, [x.label for x in theirs], [x.dist_to_boundary for x in theirs]
        )
        assert abs(bridge - toolkit) <= 1e-6

    def test_non_default_config(self):
        rng = np.random.default_rng(5)
        p, y = rng.random(32), rng.integers(0, 2, 32).astype(float)
        d = rng.integers(0, 5, 32).astype(float)
        ours_cfg = PairLossConfig(
            focal_gamma=2.0, focal_alpha=0.25, conf_weight=0.5, boundary_weight=1.0,
            conf_margin=0.4, boundary_sigma=1.0,
        )
        theirs_cfg = ts_segloss.LossConfig(
            focal_gamma=2.0, focal_alpha=0.25, conf_weight=0.5, boundary_weight=1.0,
            conf_margin=0.4, boundary_sigma=1.0,
        )
        ours = pairwise_loss(*as_tensors(p, y, d), ours_cfg).item()
        assert abs(ours - toolkit_total(p, y, d, theirs_cfg)) <= 1e-6

    def test_default_configs_match_field_by_field(self):
        assert dataclasses.asdict(PairLossConfig()) == dataclasses.asdict(ts_segloss.LossConfig())


class TestLossShape:
    def test_plain_ce_reduction(self):
        """gamma=0, alpha=0.5, other terms off reduces to half the
        binary cross-entropy."""
        cfg = PairLossConfig(focal_gamma=0.0, focal_alpha=0.5, conf_weight=0.0, boundary_weight=0.0)
        p = torch.tensor([0.2, 0.7, 0.9], dtype=torch.float64)
        y = torch.tensor([0.0, 1.0, 1.0], dtype=torch.float64)
        d = torch.tensor([math.inf] * 3, dtype=torch.float64)
        ce = -(y * torch.log(p) + (1.0 - y) * torch.log(1.0 - p)).mean()
        assert pairwise_loss(p, y, d, cfg).item() == pytest.approx(0.5 * ce.item(), abs=1e-12)

    def test_infinite_distance_drops_proximity_term(self):
        p = torch.tensor([0.3, 0.6], dtype=torch.float64)
        y = torch.tensor([1.0, 0.0], dtype=torch.float64)
        d = torch.full((2,), math.inf, dtype=torch.float64)
        without = pairwise_loss(p, y, d, PairLossConfig(boundary_weight=0.0)).item()
        assert pairwise_loss(p, y, d).item() == pytest.approx(without, abs=0.0)

    def test_extreme_probs_stay_finite(self):
        p = torch.tensor([0.0, 1.0], dtype=torch.float64)
        y = torch.tensor([1.0, 0.0], dtype=torch.float64)
        d = torch.tensor([0.0, 1.0], dtype=torch.float64)
        assert math.isfinite(pairwise_loss(p, y, d).item())

    def test_shape_validation(self):
        good = torch.tensor([0.5]), torch.tensor([1.0]), torch.tensor([0.0])
        with pytest.raises(ValueError):
            pairwise_loss(good[0].reshape(1, 1), good[1].reshape(1, 1), good[2].reshape(1, 1))
        with pytest.raises(ValueError):
            pairwise_loss(torch.tensor([0.5, 0.5]), good[1], good[2])
        with pytest.raises(ValueError):
            pairwise_loss(torch.empty(0), torch.empty(0), torch.empty(0))


class TestLogitsPath:
    def test_softmax_probability_and_gradients(self):
        torch.manual_seed(0)
        logits = torch.randn(6, 2, dtype=torch.float64, requires_grad=True)
        y = torch.tensor([0.0, 1.0, 0.0, 1.0, 0.0, 1.0], dtype=torch.float64)
        d = torch.tensor([1.0, 0.0, 2.0, 0.0, math.inf, 0.0], dtype=torch.float64)
        loss, p_not_next = loss_from_logits(logits, y, d)
        probs = torch.softmax(logits, dim=1)
        assert torch.allclose(probs.sum(dim=1), torch.ones(6, dtype=torch.float64), atol=1e-12)
        assert torch.allclose(p_not_next, probs[:, 1], atol=1e-12)
        assert loss.item() == pytest.approx(
            toolkit_total(p_not_next.detach().numpy(), y.numpy(), d.numpy()), abs=1e-9
        )
        loss.backward()
        assert logits.grad is not None
        assert torch.isfinite(logits.grad).all()
        assert not torch.all(logits.grad == 0.0)

    def test_logits_shape_validation(self):
        y = torch.tensor([1.0])
        d = torch.tensor([0.0])
        with pytest.raises(ValueError):
            loss_from_logits(torch.zeros(1, 3), y, d)
        with pytest.raises(ValueError):
            loss_from_logits(torch.zeros(2), y, d)
