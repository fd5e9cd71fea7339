"""Prediction heads over the pooled encoder representation."""

import torch
from torch import nn

N_CLASSES = 3
_CLASS_CUTS = (3, 10)      # classes: [0, 3], (3, 10], (10, inf)


def three_class_bin(count: int) -> int:
    if count < 0:
        raise ValueError(f"negative count {count}")
    for idx, cut in enumerate(_CLASS_CUTS):
        if count <= cut:
            return idx
    return len(_CLASS_CUTS)


def mean_pool(hidden: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Average hidden states over non-pad positions.

    hidden: (B, T, D); mask: (B, T) with 1 on real tokens.
    """
    weights = mask.unsqueeze(-1).to(hidden.dtype)
    total = (hidden * weights).sum(dim=1)
    denom = weights.sum(dim=1).clamp(min=1.0)
    return total / denom


class RegressionHead(nn.Module):
    """linear -> ReLU -> linear -> scalar, predicting log(1 + count)."""

    def __init__(self, d_model: int, hidden: int = 32):
        super().__init__()
        self.inner = nn.Linear(d_model, hidden)
        self.out = nn.Linear(hidden, 1)

    def forward(self, pooled: torch.Tensor) -> torch.Tensor:
        return self.out(torch.relu(self.inner(pooled))).squeeze(-1)


class ClassificationHead(nn.Module):
    """Single linear layer emitting pre-softmax scores for 3 classes."""

    def __init__(self, d_model: int):
        super().__init__()
        self.out = nn.Linear(d_model, N_CLASSES)

    def forward(self, pooled: torch.Tensor) -> torch.Tensor:
        return self.out(pooled)


def log_mse_loss(pred_log: torch.Tensor, counts: torch.Tensor) -> torch.Tensor:
    """Mean squared error in log(1 + count) space."""
    target = torch.log1p(counts.to(pred_log.dtype))
    return torch.mean((pred_log - target) ** 2)
