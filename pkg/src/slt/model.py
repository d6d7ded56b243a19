"""Full sign-to-text model: 3D ResNet, SWM projection and Transformer."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, add_constant, dropout, no_grad
from .data.vocab import Vocabulary
from .nn import Module
from .rng import SplitMix64
from .seq2seq import Transformer, TransformerConfig, greedy_decode, positional_encoding, postprocess_output
from .vision import ResNet3D, ResNetConfig, SWMProjection


class SignTranslationModel(Module):
    """One clip-level feature vector, split into ``swm`` pseudo-words, feeds the encoder.

    Both blocks sit in one graph, so a single backward pass reaches the
    visual stem.
    """

    def __init__(self, vision_cfg: ResNetConfig, swm: int, lang_cfg: TransformerConfig,
                 vocab_size: int, rng: SplitMix64):
        self.vision_cfg = vision_cfg
        self.lang_cfg = lang_cfg
        self.swm = swm
        self.vision = ResNet3D(vision_cfg, rng)
        self.bridge = SWMProjection(self.vision.feature_size, swm, lang_cfg.d_model, rng)
        self.transformer = Transformer(lang_cfg, vocab_size, rng)

    def set_dropout_rng(self, rng: SplitMix64 | None) -> None:
        self.transformer.dropout_rng = rng

    def features(self, clips) -> Tensor:
        """(N, 3, D, H, W) clips -> clip-level features (N, F)."""
        if not isinstance(clips, Tensor):
            clips = Tensor(np.asarray(clips, dtype=self.bridge.weight.dtype))
        return self.vision(clips)

    def encode_features(self, feature: Tensor) -> Tensor:
        """(N, F) features -> encoder memory (N, swm, d_model)."""
        x = self.bridge(feature)
        x = add_constant(x, positional_encoding(self.swm, self.lang_cfg.d_model)[None])
        x = dropout(x, self.lang_cfg.dropout, self.transformer.dropout_rng, self.training)
        return self.transformer.encode(x)

    def encode(self, clips) -> Tensor:
        """(N, 3, D, H, W) clips -> encoder memory (N, swm, d_model)."""
        return self.encode_features(self.features(clips))

    def forward(self, clips, dec_in: np.ndarray) -> Tensor:
        """Teacher-forced logits (N, T, V)."""
        return self.transformer.decode(dec_in, self.encode(clips))

    __call__ = forward

    def translate_ids(self, clips) -> list[list[int]]:
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                memory = self.encode(clips)
            return greedy_decode(memory, self.lang_cfg, self.transformer)
        finally:
            self.train(was_training)

    def translate(self, clips, vocab: Vocabulary) -> list[str]:
        return [postprocess_output(ids, vocab) for ids in self.translate_ids(clips)]
