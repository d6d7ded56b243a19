import math

import numpy as np
import pytest

from slt.autodiff import Tensor, no_grad
from slt.data.vocab import EOS_ID, Vocabulary
from slt.errors import ConfigError, ContractError, ShapeError
from slt.rng import SplitMix64
from slt.seq2seq import (
    Transformer,
    TransformerConfig,
    decoder_forward,
    encoder_forward,
    greedy_decode,
    positional_encoding,
    postprocess_output,
    shift_right,
)

DESK = TransformerConfig(16, 2, 1, 32, 0.0, 50)


def desk_model(vocab_size=11, seed=0, cfg=DESK):
    return Transformer(cfg, vocab_size, SplitMix64(seed)).eval()


def test_config_invariants():
    with pytest.raises(ConfigError):
        TransformerConfig(d_model=10, n_heads=3)
    with pytest.raises(ConfigError):
        TransformerConfig(max_output_len=0)
    with pytest.raises(ConfigError):
        TransformerConfig(dropout=1.0)


def test_positional_encoding_values():
    pe = positional_encoding(5, 4)
    assert np.array_equal(pe[0], [0, 1, 0, 1])
    assert math.isclose(pe[1, 0], 0.841471, abs_tol=1e-6)
    assert np.all(np.abs(positional_encoding(60, 512)) <= 1)
    with pytest.raises(ConfigError):
        positional_encoding(3, 5)


def test_encoder_full_scale_shape():
    cfg = TransformerConfig()
    model = Transformer(cfg, 8, SplitMix64(0)).eval()
    with no_grad():
        out = encoder_forward(Tensor(SplitMix64(1).normal((32, 512))), cfg, model, expected_rows=32)
    assert out.shape == (32, 512)


def test_encoder_row_mismatch():
    with pytest.raises(ShapeError):
        encoder_forward(Tensor(np.zeros((5, 16))), DESK, desk_model(), expected_rows=4)


def test_zero_residual_branches_leave_only_norms():
    model = desk_model()
    layer = model.encoder_layers[0]
    for lin in (layer.attn.out, layer.ffn.fc2):
        lin.weight.data[:] = 0
        lin.bias.data[:] = 0
    x = SplitMix64(2).normal((4, 16))
    out = encoder_forward(Tensor(x), DESK, model).data

    def ln(v):
        return (v - v.mean(-1, keepdims=True)) / np.sqrt(v.var(-1, keepdims=True) + 1e-5)

    np.testing.assert_allclose(out, ln(ln(x)), atol=1e-5)


def test_attention_rows_sum_to_one():
    model = desk_model()
    memory = encoder_forward(Tensor(SplitMix64(3).normal((4, 16))), DESK, model)
    decoder_forward(np.array([1, 5, 6, 7]), memory, DESK, model)
    attns = [model.encoder_layers[0].attn, model.decoder_layers[0].self_attn, model.decoder_layers[0].cross_attn]
    for attn in attns:
        np.testing.assert_allclose(attn.last_weights.sum(-1), 1.0, atol=1e-6)


def test_decoder_desk_shape_and_finite():
    model = desk_model()
    memory = Tensor(SplitMix64(4).normal((4, 16)))
    logits = decoder_forward(np.array([1, 4, 5, 6, 7]), memory, DESK, model)
    assert logits.shape == (5, 11)
    assert np.all(np.isfinite(logits.data))


def test_decoder_causality():
    model = desk_model()
    memory = Tensor(SplitMix64(5).normal((4, 16)))
    base = np.array([1, 4, 5, 6, 7, 8])
    ref = decoder_forward(base, memory, DESK, model).data
    for t in range(len(base) - 1):
        changed = base.copy()
        changed[t + 1:] = 9
        out = decoder_forward(changed, memory, DESK, model).data
        assert np.array_equal(out[:t + 1], ref[:t + 1])


def test_decoder_length_limit():
    cfg = TransformerConfig(16, 2, 1, 32, 0.0, 4)
    model = desk_model(cfg=cfg)
    memory = Tensor(np.zeros((1, 4, 16)))
    model.decode(np.ones((1, 5), dtype=np.int64), memory)  # max_output_len tokens plus BOS
    with pytest.raises(ContractError):
        model.decode(np.ones((1, 6), dtype=np.int64), memory)


def test_shift_right():
    assert np.array_equal(shift_right(np.array([[7, 8, 2]])), [[1, 7, 8]])


def _fixed_output(model, favoured):
    model.output.weight.data[:] = 0
    model.output.bias.data[:] = 0
    model.output.bias.data[favoured] = 1.0


def test_greedy_always_eos_is_empty():
    model = desk_model()
    _fixed_output(model, [EOS_ID])
    assert greedy_decode(Tensor(np.zeros((4, 16))), DESK, model) == [[]]


def test_greedy_never_eos_hits_length_cap():
    cfg = TransformerConfig(16, 2, 1, 32, 0.0, 50)
    model = desk_model(cfg=cfg)
    _fixed_output(model, [5])
    out = greedy_decode(Tensor(np.zeros((4, 16))), cfg, model)
    assert out == [[5] * 50]


def test_greedy_tie_goes_to_lowest_id():
    model = desk_model()
    _fixed_output(model, [3, 7])
    out = greedy_decode(Tensor(np.zeros((4, 16))), DESK, model)
    assert out[0][0] == 3


def test_greedy_batch_and_determinism():
    model = desk_model(seed=3)
    memory = Tensor(SplitMix64(6).normal((3, 4, 16)))
    a = greedy_decode(memory, DESK, model)
    b = greedy_decode(memory, DESK, model)
    assert a == b and len(a) == 3
    for i in range(3):
        assert greedy_decode(Tensor(memory.data[i]), DESK, model)[0] == a[i]


def test_postprocess_output():
    vocab = Vocabulary(["Die", ".", "Und"])
    die, dot, und = vocab.id("Die"), vocab.id("."), vocab.id("Und")
    unk = vocab.id("never-seen")
    assert postprocess_output([die, unk, unk, dot], vocab) == "Die ."
    assert postprocess_output([unk, unk], vocab) == ""
    assert postprocess_output([und, dot], vocab) == "Und ."
