"""Post-norm Transformer encoder-decoder with greedy decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    add,
    add_constant,
    dropout,
    embedding,
    layer_norm,
    linear,
    matmul,
    mul,
    no_grad,
    relu,
    reshape,
    softmax,
    transpose,
)
from .data.vocab import BOS_ID, EOS_ID, PAD_ID, SPECIAL_IDS, Vocabulary
from .errors import ConfigError, ContractError, ShapeError
from .nn import Module, normal, ones, xavier_uniform, zeros
from .rng import SplitMix64

_MASK_VALUE = -1e9


@dataclass
class TransformerConfig:
    d_model: int = 512
    n_heads: int = 8
    n_layers: int = 3
    d_ffn: int = 2048
    dropout: float = 0.1
    max_output_len: int = 50

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model={self.d_model} not divisible by n_heads={self.n_heads}")
        if self.d_model % 2:
            raise ConfigError("d_model must be even for sinusoidal positions")
        if self.max_output_len < 1:
            raise ConfigError("max_output_len must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")

    @property
    def max_positions(self) -> int:
        # a max-length target plus its EOS
        return self.max_output_len + 1


def positional_encoding(length: int, d_model: int) -> np.ndarray:
    """Sinusoidal table: PE[pos, 2i] = sin(pos / 10000^(2i/d)), PE[pos, 2i+1] = cos(...)."""
    if length < 1:
        raise ConfigError("length must be >= 1")
    if d_model % 2:
        raise ConfigError("d_model must be even")
    pos = np.arange(length, dtype=np.float64)[:, None]
    rates = np.power(10000.0, -np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    pe = np.zeros((length, d_model))
    pe[:, 0::2] = np.sin(pos * rates)
    pe[:, 1::2] = np.cos(pos * rates)
    return pe


def causal_mask(t: int) -> np.ndarray:
    return np.triu(np.full((t, t), _MASK_VALUE), k=1)


class LayerNorm(Module):
    def __init__(self, d: int):
        self.gain = ones(d)
        self.bias = zeros(d)

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: SplitMix64):
        self.weight = xavier_uniform(rng, d_in, d_out)
        self.bias = zeros(d_out)

    def __call__(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)


class MultiHeadAttention(Module):
    def __init__(self, d_model: int, n_heads: int, rng: SplitMix64):
        self.n_heads = n_heads
        self.q = Linear(d_model, d_model, rng)
        self.k = Linear(d_model, d_model, rng)
        self.v = Linear(d_model, d_model, rng)
        self.out = Linear(d_model, d_model, rng)
        # filled by each call; handy for inspecting attention rows
        self.last_weights: np.ndarray | None = None

    def _split(self, x: Tensor) -> Tensor:
        b, t, d = x.shape
        return transpose(reshape(x, (b, t, self.n_heads, d // self.n_heads)), (0, 2, 1, 3))

    def __call__(self, query: Tensor, memory: Tensor, mask: np.ndarray | None = None) -> Tensor:
        b, t, d = query.shape
        q, k, v = self._split(self.q(query)), self._split(self.k(memory)), self._split(self.v(memory))
        scores = mul(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(d // self.n_heads))
        if mask is not None:
            scores = add_constant(scores, mask)
        weights = softmax(scores, axis=-1)
        self.last_weights = weights.data
        ctx = transpose(matmul(weights, v), (0, 2, 1, 3))
        return self.out(reshape(ctx, (b, t, d)))


class FeedForward(Module):
    def __init__(self, d_model: int, d_ffn: int, rng: SplitMix64):
        self.fc1 = Linear(d_model, d_ffn, rng)
        self.fc2 = Linear(d_ffn, d_model, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(relu(self.fc1(x)))


class EncoderLayer(Module):
    def __init__(self, cfg: TransformerConfig, rng: SplitMix64):
        self.attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, rng)
        self.norm1 = LayerNorm(cfg.d_model)
        self.ffn = FeedForward(cfg.d_model, cfg.d_ffn, rng)
        self.norm2 = LayerNorm(cfg.d_model)
        self.p = cfg.dropout

    def __call__(self, x: Tensor, rng: SplitMix64 | None) -> Tensor:
        x = self.norm1(add(x, dropout(self.attn(x, x), self.p, rng, self.training)))
        return self.norm2(add(x, dropout(self.ffn(x), self.p, rng, self.training)))


class DecoderLayer(Module):
    def __init__(self, cfg: TransformerConfig, rng: SplitMix64):
        self.self_attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, rng)
        self.norm1 = LayerNorm(cfg.d_model)
        self.cross_attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, rng)
        self.norm2 = LayerNorm(cfg.d_model)
        self.ffn = FeedForward(cfg.d_model, cfg.d_ffn, rng)
        self.norm3 = LayerNorm(cfg.d_model)
        self.p = cfg.dropout

    def __call__(self, x: Tensor, memory: Tensor, mask: np.ndarray, rng: SplitMix64 | None) -> Tensor:
        x = self.norm1(add(x, dropout(self.self_attn(x, x, mask), self.p, rng, self.training)))
        x = self.norm2(add(x, dropout(self.cross_attn(x, memory), self.p, rng, self.training)))
        return self.norm3(add(x, dropout(self.ffn(x), self.p, rng, self.training)))


class Transformer(Module):
    """Encoder over a fixed-length input sequence, decoder over target tokens.

    Target embedding and output projection are separate matrices.
    """

    def __init__(self, cfg: TransformerConfig, vocab_size: int, rng: SplitMix64):
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.encoder_layers = [EncoderLayer(cfg, rng) for _ in range(cfg.n_layers)]
        self.decoder_layers = [DecoderLayer(cfg, rng) for _ in range(cfg.n_layers)]
        self.embed = normal(rng, (vocab_size, cfg.d_model), std=cfg.d_model**-0.5)
        self.output = Linear(cfg.d_model, vocab_size, rng)
        self.dropout_rng: SplitMix64 | None = None

    def encode(self, x: Tensor) -> Tensor:
        for layer in self.encoder_layers:
            x = layer(x, self.dropout_rng)
        return x

    def decode(self, dec_in: np.ndarray, memory: Tensor) -> Tensor:
        dec_in = np.atleast_2d(np.asarray(dec_in, dtype=np.int64))
        b, t = dec_in.shape
        if t > self.cfg.max_positions:
            raise ContractError(f"decoder input length {t} exceeds {self.cfg.max_positions}")
        if memory.ndim != 3 or memory.shape[0] != b or memory.shape[2] != self.cfg.d_model:
            raise ShapeError(f"memory {memory.shape} does not match a batch of {b} with d_model {self.cfg.d_model}")
        x = mul(embedding(self.embed, dec_in), math.sqrt(self.cfg.d_model))
        x = add_constant(x, positional_encoding(t, self.cfg.d_model)[None])
        x = dropout(x, self.cfg.dropout, self.dropout_rng, self.training)
        mask = causal_mask(t)
        for layer in self.decoder_layers:
            x = layer(x, memory, mask, self.dropout_rng)
        return self.output(x)


def encoder_forward(inputs: Tensor, cfg: TransformerConfig, params: Transformer, expected_rows: int | None = None) -> Tensor:
    """Run the encoder stack over (swm, d_model) or (N, swm, d_model) inputs."""
    single = inputs.ndim == 2
    x = reshape(inputs, (1,) + inputs.shape) if single else inputs
    if x.ndim != 3 or x.shape[-1] != cfg.d_model:
        raise ShapeError(f"encoder input {inputs.shape} does not end in d_model={cfg.d_model}")
    if expected_rows is not None and x.shape[1] != expected_rows:
        raise ShapeError(f"encoder input has {x.shape[1]} rows, expected SWM={expected_rows}")
    out = params.encode(x)
    return reshape(out, out.shape[1:]) if single else out


def decoder_forward(targets: np.ndarray, memory: Tensor, cfg: TransformerConfig, params: Transformer) -> Tensor:
    """Logits (T, V) or (N, T, V) for right-shifted target ids (BOS first)."""
    ids = np.asarray(targets, dtype=np.int64)
    if ids.ndim == 1:
        mem = reshape(memory, (1,) + memory.shape) if memory.ndim == 2 else memory
        logits = params.decode(ids[None], mem)
        return reshape(logits, logits.shape[1:])
    return params.decode(ids, memory)


def shift_right(target_ids: np.ndarray) -> np.ndarray:
    """Decoder input for teacher forcing: BOS followed by all but the last target."""
    target_ids = np.atleast_2d(target_ids)
    bos = np.full((target_ids.shape[0], 1), BOS_ID, dtype=np.int64)
    return np.concatenate([bos, target_ids[:, :-1]], axis=1)


def greedy_decode(memory: Tensor, cfg: TransformerConfig, params: Transformer,
                  vocab: Vocabulary | None = None) -> list[list[int]]:
    """Argmax decoding from BOS until EOS or ``max_output_len`` tokens.

    ``memory`` is (swm, d_model) for one clip or (N, swm, d_model). Ties go to
    the lowest id. The returned ids exclude BOS and EOS.
    """
    mem = reshape(memory, (1,) + memory.shape) if memory.ndim == 2 else memory
    n = mem.shape[0]
    seqs = np.full((n, 1), BOS_ID, dtype=np.int64)
    out: list[list[int]] = [[] for _ in range(n)]
    done = np.zeros(n, dtype=bool)
    was_training = params.training
    params.eval()
    try:
        with no_grad():
            for _ in range(cfg.max_output_len):
                # argmax returns the first maximum, i.e. the lowest id on ties
                nxt = params.decode(seqs, mem).data[:, -1, :].argmax(axis=-1)
                for i in np.flatnonzero(~done):
                    if nxt[i] == EOS_ID:
                        done[i] = True
                    else:
                        out[i].append(int(nxt[i]))
                if done.all():
                    break
                seqs = np.concatenate([seqs, nxt[:, None]], axis=1)
    finally:
        params.train(was_training)
    return out


def postprocess_output(ids, vocab: Vocabulary) -> str:
    """Surface string with special tokens (PAD, BOS, EOS, UNK) removed."""
    return " ".join(vocab.token(i) for i in ids if int(i) not in SPECIAL_IDS)
