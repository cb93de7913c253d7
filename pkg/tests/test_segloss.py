"""Loss terms, batch reduction, and analytic gradients."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from textseg.segloss import (
    LossBatch,
    LossConfig,
    grad_wrt_probs,
    loss_terms,
    seg_loss,
    seg_loss_grad_logits,
    sigmoid,
)

from oracles import oracle_grad_logits, oracle_loss_parts, oracle_seg_loss


def batch(p, y, d):
    return LossBatch(
        probs=np.asarray(p, dtype=float),
        labels=np.asarray(y, dtype=float),
        dists=np.asarray(d, dtype=float),
    )


def single_terms(p, y, d, cfg=None):
    focal, conf, bound = loss_terms(batch([p], [y], [d]), cfg or LossConfig())
    return float(focal[0]), float(conf[0]), float(bound[0])


class TestLossBatch:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            batch([0.5, 0.5], [1], [0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            batch([], [], [])

    def test_bad_label_rejected(self):
        with pytest.raises(ValueError):
            batch([0.5], [2], [0])

    def test_prob_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            batch([1.5], [1], [0])

    def test_negative_dist_rejected(self):
        with pytest.raises(ValueError):
            batch([0.5], [1], [-1])

    def test_inf_dist_allowed(self):
        assert batch([0.5], [1], [math.inf]).dists[0] == math.inf


class TestFocalTerm:
    def test_perfect_prediction_zero(self):
        focal, _, _ = single_terms(1.0 - 1e-7, 1, 0)
        assert focal == pytest.approx(0.0, abs=1e-6)

    def test_reduces_to_cross_entropy(self):
        # gamma=0, alpha_t=1 for the boundary class, p_t = e^-1.
        cfg = LossConfig(focal_gamma=0.0, focal_alpha=1.0)
        focal, _, _ = single_terms(math.exp(-1), 1, 0, cfg)
        assert focal == pytest.approx(1.0, rel=1e-12)

    def test_default_boundary_at_half(self):
        # Recomputed by the independent oracle, not the rounded figure.
        focal, _, _ = single_terms(0.5, 1, 0)
        expected = oracle_loss_parts(0.5, 1, 0, 1.5, 0.8, 0.5, 2.0)[0]
        assert focal == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.8 * 0.5**1.5 * math.log(2), rel=1e-12)

    def test_monotone_decreasing_in_pt(self):
        cfg = LossConfig()
        values = [single_terms(p, 1, 0, cfg)[0] for p in np.linspace(0.05, 0.95, 19)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_gamma_zero_half_alpha_proportional_to_ce(self):
        cfg = LossConfig(focal_gamma=0.0, focal_alpha=0.5)
        for p, y in [(0.3, 1), (0.8, 0), (0.6, 1)]:
            focal, _, _ = single_terms(p, y, 0, cfg)
            p_t = p if y == 1 else 1 - p
            assert focal == pytest.approx(0.5 * -math.log(p_t), rel=1e-12)


class TestConfTerm:
    def test_overconfident_wrong(self):
        _, conf, _ = single_terms(0.9, 0, 0)
        assert conf == pytest.approx(0.16, rel=1e-12)

    def test_below_margin_zero(self):
        _, conf, _ = single_terms(0.4, 0, 0)
        assert conf == 0.0

    def test_wrong_class_probability(self):
        _, conf, _ = single_terms(0.2, 1, 0)
        assert conf == pytest.approx(0.09, rel=1e-12)


class TestBoundaryTerm:
    def test_weight_one_at_boundary(self):
        _, _, bound = single_terms(0.5, 1, 0)
        assert bound == pytest.approx(math.log(2), rel=1e-12)

    def test_infinite_distance_contributes_nothing(self):
        _, _, bound = single_terms(0.1, 1, math.inf)
        assert bound == 0.0

    def test_exp_decay(self):
        _, _, bound = single_terms(0.5, 0, 2)
        assert bound == pytest.approx(math.exp(-1) * math.log(2), rel=1e-12)


class TestSegLoss:
    def test_perfect_batch_vanishes(self):
        value = seg_loss(batch([1 - 1e-7, 1e-7], [1, 0], [0, 3]))
        assert value.total == pytest.approx(0.0, abs=1e-5)

    def test_single_example_composition(self):
        value = seg_loss(batch([0.5], [1], [0]))
        focal = oracle_loss_parts(0.5, 1, 0, 1.5, 0.8, 0.5, 2.0)[0]
        expected = focal + 0.15 * 0.0 + 0.2 * math.log(2)
        assert value.total == pytest.approx(expected, rel=1e-12)

    def test_zero_weights_reduce_to_focal(self):
        cfg = LossConfig(conf_weight=0.0, boundary_weight=0.0)
        b = batch([0.3, 0.7, 0.9], [1, 0, 1], [0, 1, 5])
        value = seg_loss(b, cfg)
        assert value.total == pytest.approx(value.focal, rel=1e-12)

    def test_matches_oracle_on_mixed_batch(self):
        cfg = LossConfig()
        p = [0.2, 0.5, 0.9, 0.999, 0.01]
        y = [1, 0, 1, 0, 1]
        d = [0, 1, 2, math.inf, 4]
        value = seg_loss(batch(p, y, d), cfg)
        assert value.total == pytest.approx(oracle_seg_loss(p, y, d, cfg), rel=1e-12)

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=0.01, max_value=0.99),
                st.integers(min_value=0, max_value=1),
                st.one_of(st.integers(min_value=0, max_value=20), st.just(math.inf)),
            ),
            min_size=1,
            max_size=16,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_non_negative_terms(self, rows):
        p, y, d = zip(*rows)
        value = seg_loss(batch(p, y, d))
        assert value.focal >= 0 and value.conf >= 0 and value.bound >= 0
        assert value.total >= 0


class TestGradients:
    def test_logistic_ce_identity(self):
        # gamma=0, alpha=0.5, weights off: loss is 0.5 * cross-entropy on
        # both classes, so dL/dz = 0.5 * (p - y) / n.
        cfg = LossConfig(focal_gamma=0.0, focal_alpha=0.5, conf_weight=0.0, boundary_weight=0.0)
        z = np.array([-1.5, 0.0, 2.0])
        y = np.array([1.0, 0.0, 1.0])
        d = np.array([0.0, 1.0, math.inf])
        _, grad = seg_loss_grad_logits(z, y, d, cfg)
        p = sigmoid(z)
        np.testing.assert_allclose(grad, 0.5 * (p - y) / 3.0, rtol=1e-12)

    def test_perfect_predictions_flat(self):
        cfg = LossConfig()
        z = np.array([12.0, -12.0])
        y = np.array([1.0, 0.0])
        d = np.array([0.0, 1.0])
        _, grad = seg_loss_grad_logits(z, y, d, cfg)
        assert np.all(np.abs(grad) < 1e-3)

    def test_matches_finite_differences_seeded_batch(self):
        rng = np.random.default_rng(0)
        cfg = LossConfig()
        z = rng.uniform(-3.0, 3.0, size=20)
        y = rng.integers(0, 2, size=20).astype(float)
        d = rng.integers(0, 8, size=20).astype(float)
        d[y == 1] = 0.0
        d[3] = math.inf
        y[3] = 1.0
        _, grad = seg_loss_grad_logits(z, y, d, cfg)
        fd = oracle_grad_logits(list(z), list(y), list(d), cfg)
        rel = np.abs(grad - fd) / np.maximum(1e-8, np.abs(fd))
        assert rel.max() <= 1e-4

    def test_grad_wrt_probs_direction(self):
        # Pushing a boundary pair's probability up must reduce the loss.
        b = batch([0.4], [1], [0])
        assert grad_wrt_probs(b)[0] < 0
        # And a continuation pair's probability down.
        b = batch([0.6], [0], [1])
        assert grad_wrt_probs(b)[0] > 0


class TestSigmoid:
    def test_extremes_stay_finite(self):
        z = np.array([-800.0, 0.0, 800.0])
        p = sigmoid(z)
        assert p[0] >= 0.0 and p[2] <= 1.0
        assert p[1] == 0.5
        assert np.all(np.isfinite(p))
