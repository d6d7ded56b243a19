"""Finite-difference check of the whole model on a tiny configuration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import GradcheckReport, Tensor, gradcheck
from .data.vocab import EOS_ID
from .model import SignTranslationModel
from .rng import SplitMix64
from .seq2seq import TransformerConfig, shift_right
from .training.loss import label_smoothed_ce
from .vision import ResNetConfig

TINY_CLIP = (8, 16, 16)


@dataclass
class ModelGradcheck:
    reports: dict[str, GradcheckReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())

    @property
    def max_rel_err(self) -> float:
        return max(r.max_rel_err for r in self.reports.values())

    def lines(self) -> list[str]:
        return [f"{name}\t{r.n_checked}\t{r.max_rel_err:.3e}\t{'ok' if r.passed else 'FAIL'}"
                for name, r in self.reports.items()]


def tiny_model(rng: SplitMix64, vocab_size: int = 11) -> SignTranslationModel:
    """Clip 3x8x16x16, ResNet-10 with base 4, d_model 16, one layer each side."""
    return SignTranslationModel(ResNetConfig(10, 4), 4, TransformerConfig(16, 2, 1, 32, 0.0, 8), vocab_size, rng)


def model_gradcheck(seed: int = 7, samples_per_param: int = 6, tol: float = 1e-3,
                    h: float = 1e-5) -> ModelGradcheck:
    """Check sampled coordinates of every parameter tensor and of the input clip, in f64."""
    rng = SplitMix64(seed)
    model = tiny_model(rng).astype(np.float64)
    vocab = model.transformer.vocab_size
    clips = rng.random((2,) + (3,) + TINY_CLIP)
    targets = np.array([[4, 5, 6, EOS_ID], [7, 8, EOS_ID, 0]], dtype=np.int64)
    dec_in = shift_right(targets)
    if targets.max() >= vocab:
        raise ValueError("vocab too small for the check targets")
    clip_t = Tensor(clips, requires_grad=True, dtype=np.float64)

    def loss():
        return label_smoothed_ce(model(clip_t, dec_in), targets, eps=0.1)

    reports = {"input": gradcheck(loss, clip_t, h=h, tol=tol, n_samples=samples_per_param, rng=rng)}
    for name, p in model.named_parameters():
        reports[name] = gradcheck(loss, p, h=h, tol=tol, n_samples=samples_per_param, rng=rng)
    model.zero_grad()
    return ModelGradcheck(reports)
