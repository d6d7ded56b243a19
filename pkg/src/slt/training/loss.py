"""Label-smoothed cross-entropy and perplexity helpers."""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, log_softmax, mul, tsum
from ..data.vocab import PAD_ID
from ..errors import ContractError, ShapeError


def smoothed_targets(targets: np.ndarray, vocab_size: int, eps: float) -> np.ndarray:
    """q(y) = 1 - eps, q(k) = eps / (V - 2) for k not in {y, PAD}, q(PAD) = 0."""
    targets = np.asarray(targets, dtype=np.int64)
    q = np.zeros(targets.shape + (vocab_size,))
    if eps > 0:
        if vocab_size <= 2:
            raise ContractError("label smoothing needs at least one non-gold, non-PAD class")
        q[:] = eps / (vocab_size - 2)
        q[..., PAD_ID] = 0.0
    np.put_along_axis(q, targets[..., None], 1.0 - eps, axis=-1)
    return q


def label_smoothed_ce(logits: Tensor, targets, mask=None, eps: float = 0.1,
                      reduction: str = "mean") -> Tensor:
    """Smoothed CE over (..., T, V) logits; PAD positions (mask False) add nothing.

    ``reduction="sum"`` returns the token sum, which gradient accumulation
    divides by the group's token count.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.shape[:-1] != targets.shape:
        raise ShapeError(f"logits {logits.shape} do not match targets {targets.shape}")
    mask = targets != PAD_ID if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != targets.shape:
        raise ShapeError("mask and targets differ in shape")
    count = int(mask.sum())
    if count == 0:
        raise ContractError("every target position is PAD")
    if not 0.0 <= eps < 1.0:
        raise ContractError("smoothing must lie in [0, 1)")
    q = smoothed_targets(np.where(mask, targets, PAD_ID), logits.shape[-1], eps)
    q *= mask[..., None]
    total = tsum(mul(log_softmax(logits, axis=-1), -q.astype(logits.dtype)))
    if reduction == "sum":
        return total
    if reduction != "mean":
        raise ValueError(f"unknown reduction {reduction!r}")
    return mul(total, 1.0 / count)


def token_nll(logits: np.ndarray, targets: np.ndarray, mask: np.ndarray) -> tuple[float, int]:
    """Unsmoothed NLL summed over unmasked tokens, and the token count."""
    z = logits.astype(np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    gold = np.take_along_axis(logp, np.asarray(targets)[..., None], axis=-1)[..., 0]
    return float(-(gold * mask).sum()), int(mask.sum())
