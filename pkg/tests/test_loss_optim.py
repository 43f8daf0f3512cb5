import math

import numpy as np
import pytest

from partdetect.nn import (SGDMomentum, sgd_step, softmax,
                           softmax_cross_entropy, softmax_cross_entropy_batch)


class TestSoftmaxCrossEntropy:
    def test_symmetric_logits(self):
        probs, loss = softmax_cross_entropy([0.0, 0.0], 0)
        assert np.allclose(probs, [0.5, 0.5])
        assert loss == pytest.approx(math.log(2), abs=1e-12)

    def test_ln3_vs_zero(self):
        probs, _ = softmax_cross_entropy([math.log(3), 0.0], 0)
        assert np.allclose(probs, [0.75, 0.25])

    def test_huge_logits_no_overflow(self):
        probs, loss = softmax_cross_entropy([1000.0, 0.0], 0)
        assert np.isfinite(probs).all()
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_invalid_target(self):
        with pytest.raises(ValueError, match="target"):
            softmax_cross_entropy([0.0, 0.0], 2)

    def test_requires_two_logits(self):
        with pytest.raises(ValueError, match="2 logits"):
            softmax_cross_entropy([0.0, 0.0, 0.0], 0)

    def test_probs_sum_to_one_for_any_finite_logits(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            logits = rng.uniform(-500, 500, size=2)
            probs, _ = softmax_cross_entropy(logits, 1)
            assert abs(probs.sum() - 1.0) < 1e-9
            assert ((probs >= 0) & (probs <= 1)).all()

    def test_combined_gradient_is_probs_minus_onehot(self):
        logits = np.array([[0.3, -1.2]])
        probs, _, dlogits = softmax_cross_entropy_batch(logits, [1])
        onehot = np.array([[0.0, 1.0]])
        assert np.allclose(dlogits, probs - onehot)

    def test_batch_mean_loss(self):
        # rows lose ln 2 and -ln 0.75 respectively; batch loss is the mean
        logits = np.array([[0.0, 0.0], [math.log(3), 0.0]])
        _, loss, _ = softmax_cross_entropy_batch(logits, [0, 0])
        assert loss == pytest.approx((math.log(2) - math.log(0.75)) / 2,
                                     rel=1e-9)

    def test_softmax_batch_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        p = softmax(rng.standard_normal((50, 2)) * 30)
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)


class TestSGD:
    def test_single_step_arithmetic(self):
        w = np.array([1.0])
        v = np.zeros(1)
        sgd_step(w, np.array([0.5]), v, lr=0.1, momentum=0.0)
        assert w[0] == pytest.approx(0.95)

    def test_zero_gradient_no_change(self):
        w = np.array([1.0, -2.0])
        v = np.zeros(2)
        sgd_step(w, np.zeros(2), v, lr=0.1, momentum=0.9)
        assert np.array_equal(w, [1.0, -2.0])

    def test_two_momentum_steps_hand_recurrence(self):
        # v1 = 1, w1 = -0.1; v2 = 0.9 + 1 = 1.9, w2 = -0.1 - 0.19 = -0.29
        w = np.array([0.0])
        v = np.zeros(1)
        g = np.array([1.0])
        sgd_step(w, g, v, lr=0.1, momentum=0.9)
        sgd_step(w, g, v, lr=0.1, momentum=0.9)
        assert w[0] == pytest.approx(-0.29)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            sgd_step(np.zeros(2), np.zeros(3), np.zeros(2), 0.1, 0.9)

    def test_bad_lr(self):
        with pytest.raises(ValueError, match="learning rate"):
            SGDMomentum(lr=0.0)


def test_batch_loss_decreases_under_sgd():
    # tiny dense net on separable blobs: a few steps must reduce the loss
    from partdetect.nn import Dense, Network, ReLU

    rng = np.random.default_rng(3)
    net = Network([Dense(4, 8, rng=rng, dtype=np.float64), ReLU(),
                   Dense(8, 2, rng=rng, dtype=np.float64)])
    x = np.concatenate([rng.normal(-1, 0.3, (16, 4)),
                        rng.normal(1, 0.3, (16, 4))])
    y = np.array([0] * 16 + [1] * 16)
    opt = SGDMomentum(lr=0.05, momentum=0.9)
    losses = []
    for _ in range(30):
        losses.append(net.train_step(x, y, rng))
        opt.step(net)
    assert losses[-1] < losses[0] * 0.5
