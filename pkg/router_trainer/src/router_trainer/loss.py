"""Soft Tversky loss over batch probabilities, with label smoothing on targets.

With positive-class probabilities p and smoothed targets y':
    TP = sum(p * y')      FP = sum(p * (1 - y'))      FN = sum((1 - p) * y')
    loss = 1 - TP / (TP + alpha * FP + beta * FN)
alpha > beta penalizes false positives harder, biasing the router toward the
normal pipeline when unsure. Smoothing replaces y with y*(1-eps) + eps/2
before the soft counts.
"""

import torch


def smooth_labels(labels: torch.Tensor, eps: float) -> torch.Tensor:
    return labels.float() * (1.0 - eps) + eps / 2.0


def tversky_loss(probs: torch.Tensor, labels: torch.Tensor,
                 alpha: float, beta: float, eps: float) -> torch.Tensor:
    targets = smooth_labels(labels, eps)
    tp = (probs * targets).sum()
    fp = (probs * (1.0 - targets)).sum()
    fn = ((1.0 - probs) * targets).sum()
    denom = tp + alpha * fp + beta * fn
    return 1.0 - tp / denom.clamp_min(1e-12)
