import pytest
import torch

from router_trainer.loss import smooth_labels, tversky_loss

ALPHA, BETA, EPS = 0.7, 0.3, 0.2


def _loss(probs, labels, alpha=ALPHA, beta=BETA, eps=EPS):
    return float(tversky_loss(torch.tensor(probs), torch.tensor(labels),
                              alpha, beta, eps))


def test_smoothing_formula():
    smoothed = smooth_labels(torch.tensor([0, 1]), 0.2)
    assert smoothed.tolist() == pytest.approx([0.1, 0.9])


def test_perfect_batch_near_zero_loss():
    # With eps=0 and exact predictions, FP=FN=0 and the loss vanishes.
    assert _loss([1.0, 0.0], [1, 0], eps=0.0) == 0.0


def test_fp_costs_more_than_fn():
    # Equal-magnitude single errors: a confident false positive (p=0.9 on a
    # negative) must cost strictly more than the mirror false negative
    # (p=0.1 on a positive), because alpha=0.7 > beta=0.3.
    fp_loss = _loss([0.9], [0])
    fn_loss = _loss([0.1], [1])
    assert fp_loss > fn_loss


def test_fp_fn_closed_forms():
    # p=0.9, y'=0.1: TP=0.09, FP=0.81, FN=0.01.
    tp, fp, fn = 0.09, 0.81, 0.01
    assert _loss([0.9], [0]) == pytest.approx(
        1.0 - tp / (tp + ALPHA * fp + BETA * fn), abs=1e-6)
    # p=0.1, y'=0.9: TP=0.09, FP=0.01, FN=0.81.
    tp, fp, fn = 0.09, 0.01, 0.81
    assert _loss([0.1], [1]) == pytest.approx(
        1.0 - tp / (tp + ALPHA * fp + BETA * fn), abs=1e-6)


def test_symmetric_when_alpha_equals_beta():
    fp_loss = _loss([0.9], [0], alpha=0.5, beta=0.5)
    fn_loss = _loss([0.1], [1], alpha=0.5, beta=0.5)
    assert fp_loss == pytest.approx(fn_loss, abs=1e-6)


def test_batch_soft_counts_sum():
    probs = [0.8, 0.3, 0.6, 0.1]
    labels = [1, 0, 0, 1]
    targets = [0.9, 0.1, 0.1, 0.9]
    tp = sum(p * t for p, t in zip(probs, targets))
    fp = sum(p * (1 - t) for p, t in zip(probs, targets))
    fn = sum((1 - p) * t for p, t in zip(probs, targets))
    expected = 1.0 - tp / (tp + ALPHA * fp + BETA * fn)
    assert _loss(probs, labels) == pytest.approx(expected, abs=1e-6)
