import math

import numpy as np
import pytest

from slt.autodiff import Tensor, backward, no_grad
from slt.data.vocab import PAD_ID
from slt.errors import ContractError, FormatError, NumericalError
from slt.rng import SplitMix64
from slt.seq2seq import shift_right
from slt.training import (
    AdamState,
    OptimConfig,
    TrainState,
    adam_step,
    label_smoothed_ce,
    load_checkpoint,
    noam_lr,
    perplexity,
    save_checkpoint,
    token_nll,
    train_loop,
)
from slt.training import loop as loop_mod

from desk import desk_data, desk_model, overfit_optim


# -- loss ---------------------------------------------------------------------------


def test_label_smoothing_frozen_example():
    # independent brute-force evaluation of the smoothed target formula
    loss = label_smoothed_ce(Tensor([[0.0, 0.0, 2.0, 0.0, 0.0]]), [2], eps=0.1)
    assert abs(loss.item() - 0.6326529) < 1e-6


def test_label_smoothing_uniform_logits_give_log_v():
    loss = label_smoothed_ce(Tensor(np.zeros((3, 4))), [1, 2, 3], eps=0.1)
    assert math.isclose(loss.item(), math.log(4), rel_tol=1e-6)


def test_eps_zero_equals_nll(rng):
    logits = rng.normal((2, 5, 9)) * 3
    targets = rng.randint(9, (2, 5))
    targets[1, 3:] = PAD_ID
    targets[0, 0] = 4  # keep at least one non-PAD
    mask = targets != PAD_ID
    loss = label_smoothed_ce(Tensor(logits, dtype=np.float64), targets, mask, eps=0.0).item()
    nll, count = token_nll(logits, targets, mask)
    assert abs(loss - nll / count) < 1e-7


def test_pad_positions_contribute_nothing(rng):
    logits = rng.normal((1, 4, 6))
    targets = np.array([[4, 5, PAD_ID, PAD_ID]])
    a = label_smoothed_ce(Tensor(logits), targets).item()
    logits2 = logits.copy()
    logits2[0, 2:] = 100 * rng.normal((2, 6))
    assert label_smoothed_ce(Tensor(logits2), targets).item() == a


def test_all_pad_is_contract_error():
    with pytest.raises(ContractError):
        label_smoothed_ce(Tensor(np.zeros((2, 5))), [PAD_ID, PAD_ID])


# -- schedule and optimizer ----------------------------------------------------------


def test_noam_values_and_shape():
    assert abs(noam_lr(4000, 512) - 6.9877e-4) < 1e-8
    assert abs(noam_lr(16000, 512) - noam_lr(4000, 512) / 2) < 1e-12
    lrs = [noam_lr(s, 512) for s in range(1, 12001)]
    peak = int(np.argmax(lrs)) + 1
    assert peak == 4000
    assert all(a < b for a, b in zip(lrs[:3999], lrs[1:4000]))
    assert all(a > b for a, b in zip(lrs[3999:-1], lrs[4000:]))
    with pytest.raises(ValueError):
        noam_lr(0, 512)


def test_optim_defaults_match_table():
    cfg = OptimConfig()
    assert (cfg.beta1, cfg.beta2, cfg.epsilon, cfg.weight_decay, cfg.smoothing) == (0.9, 0.98, 1e-8, 0.001, 0.1)
    assert (cfg.warmup, cfg.accum_steps, cfg.batch_size, cfg.patience) == (4000, 32, 10, 14)
    assert cfg.effective_batch == 320


def test_adam_zero_grad_no_decay_is_noop():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    p.grad = np.zeros(2)
    adam_step([("p", p)], AdamState(), 0.1, OptimConfig(weight_decay=0.0))
    assert np.array_equal(p.data, [1.0, -2.0])


def test_adam_first_step_unit_magnitude():
    p = Tensor(np.array([1.0]), requires_grad=True, dtype=np.float64)
    p.grad = np.array([1.0])
    adam_step([("p", p)], AdamState(), 0.1, OptimConfig(weight_decay=0.0))
    assert abs(p.data[0] - 0.9) < 1e-6


def test_adam_coupled_weight_decay():
    p = Tensor(np.array([2.0]), requires_grad=True, dtype=np.float64)
    p.grad = np.array([0.0])
    state = AdamState()
    adam_step([("p", p)], state, 0.1, OptimConfig(weight_decay=0.001))
    np.testing.assert_allclose(state.m["p"], [0.1 * 0.002])
    assert p.data[0] < 2.0


def test_adam_nan_gradient_fails_fast():
    p = Tensor(np.array([1.0]), requires_grad=True)
    p.grad = np.array([np.nan])
    with pytest.raises(NumericalError):
        adam_step([("p", p)], AdamState(), 0.1, OptimConfig())
    assert p.data[0] == 1.0


def test_adam_trajectories_bitwise_identical():
    runs = []
    for _ in range(2):
        r = SplitMix64(4)
        p = Tensor(r.normal(5), requires_grad=True)
        state = AdamState()
        for step in range(1, 20):
            p.grad = r.normal(5).astype(np.float32)
            adam_step([("p", p)], state, noam_lr(step, 16, 5), OptimConfig())
        runs.append(p.data.copy())
    assert np.array_equal(runs[0], runs[1])


# -- perplexity ------------------------------------------------------------------------


def test_perplexity_uniform_model_is_v():
    ds, vocab = desk_data(4)
    model = desk_model(vocab)
    model.transformer.output.weight.data[:] = 0
    model.transformer.output.bias.data[:] = 0
    assert math.isclose(perplexity(model, ds), len(vocab), rel_tol=1e-5)


def test_perplexity_perfect_prediction_is_one():
    targets = np.array([[4, 5, 2]])
    logits = np.full((1, 3, 7), -60.0)
    np.put_along_axis(logits, targets[..., None], 60.0, axis=-1)
    nll, count = token_nll(logits, targets, targets != PAD_ID)
    assert math.exp(nll / count) == pytest.approx(1.0, abs=1e-12)


# -- training loop -------------------------------------------------------------------


def _scripted_ppl(monkeypatch, values):
    it = iter(values)
    monkeypatch.setattr(loop_mod, "perplexity", lambda model, data, batch_size=10: next(it))


def test_improving_dev_runs_to_epoch_limit(monkeypatch, tmp_path):
    ds, vocab = desk_data(4)
    model = desk_model(vocab)
    seen = []
    _scripted_ppl(monkeypatch, [10.0 - i for i in range(6)])
    state = train_loop(model, ds, ds, vocab, overfit_optim(max_epochs=6, batch_size=4), SplitMix64(1), tmp_path,
                       on_epoch=lambda st, ppl: seen.append(st.epochs_since_improve))
    assert state.epoch == 6 and seen == [0] * 6


def test_best_checkpoint_written_only_on_improvement(monkeypatch, tmp_path):
    ds, vocab = desk_data(4)
    model = desk_model(vocab)
    _scripted_ppl(monkeypatch, [5.0, 6.0, 4.0, 4.5])
    best_epochs = []

    def record(state, ppl):
        best_epochs.append(load_checkpoint(tmp_path / "best.sltk").state.epoch)

    train_loop(model, ds, ds, vocab, overfit_optim(max_epochs=4, batch_size=4), SplitMix64(1), tmp_path,
               on_epoch=record)
    assert best_epochs == [1, 1, 3, 3]
    assert load_checkpoint(tmp_path / "periodic.sltk").tag == "periodic"
    assert load_checkpoint(tmp_path / "best.sltk").state.best_dev_ppl == 4.0


def test_periodic_checkpoint_reproduces_dev_ppl(tmp_path):
    ds, vocab = desk_data(4)
    model = desk_model(vocab)
    logged = {}
    train_loop(model, ds, ds, vocab, overfit_optim(max_epochs=3, batch_size=4), SplitMix64(2), tmp_path,
               on_epoch=lambda st, ppl: logged.update({st.epoch: ppl}))
    ckpt = load_checkpoint(tmp_path / "periodic.sltk")
    assert ckpt.state.epoch == 3
    assert perplexity(ckpt.model, ds) == logged[3]


def test_logs_written(tmp_path):
    ds, vocab = desk_data(4)
    train_loop(desk_model(vocab), ds, ds, vocab, overfit_optim(max_epochs=2, batch_size=2, accum_steps=1),
               SplitMix64(3), tmp_path)
    train_rows = (tmp_path / "train_log.tsv").read_text().splitlines()
    dev_rows = (tmp_path / "dev_log.tsv").read_text().splitlines()
    assert train_rows[0] == "step\tloss\tlr" and len(train_rows) == 1 + 4
    assert dev_rows[0] == "epoch\tdev_ppl" and len(dev_rows) == 1 + 2


def test_max_steps_cap(tmp_path):
    ds, vocab = desk_data(4)
    state = train_loop(desk_model(vocab), ds, ds, vocab, overfit_optim(batch_size=1, max_steps=6),
                       SplitMix64(3), tmp_path)
    assert state.global_step == 6


def test_nan_failure_reports_step(tmp_path):
    ds, vocab = desk_data(4)
    model = desk_model(vocab)
    model.transformer.output.bias.data[0] = np.nan
    with pytest.raises(NumericalError, match="step 1"):
        train_loop(model, ds, ds, vocab, overfit_optim(max_epochs=1), SplitMix64(3), tmp_path)


def test_empty_data_rejected(tmp_path):
    ds, vocab = desk_data(2)
    empty = type(ds)([], vocab, ds.clip_dims, clips=[])
    with pytest.raises(ContractError):
        train_loop(desk_model(vocab), empty, ds, vocab, overfit_optim(), SplitMix64(0), tmp_path)


def test_dropout_training_is_seeded(tmp_path):
    ds, vocab = desk_data(4)
    logs = []
    for run in range(2):
        out = tmp_path / str(run)
        train_loop(desk_model(vocab, dropout=0.1), ds, ds, vocab, overfit_optim(max_epochs=3, batch_size=2),
                   SplitMix64(5), out)
        logs.append((out / "train_log.tsv").read_text())
    assert logs[0] == logs[1]


def test_loss_halves_within_fifty_steps(tmp_path):
    ds, vocab = desk_data()
    train_loop(desk_model(vocab), ds, ds, vocab, overfit_optim(max_steps=50), SplitMix64(7), tmp_path)
    losses = [float(r.split("\t")[1]) for r in (tmp_path / "train_log.tsv").read_text().splitlines()[1:]]
    assert len(losses) == 50
    assert losses[-1] <= 0.5 * losses[0]


# -- checkpoints -----------------------------------------------------------------------


def test_checkpoint_round_trip_bitwise(tmp_path, rng):
    ds, vocab = desk_data(4)
    model = desk_model(vocab)
    state = TrainState(global_step=3, epoch=1, best_dev_ppl=2.5)
    state.adam.m = {n: rng.normal(p.shape).astype(np.float32) for n, p in model.named_parameters()}
    state.adam.v = {n: rng.random(p.shape).astype(np.float32) for n, p in model.named_parameters()}
    save_checkpoint(tmp_path / "c.sltk", model, vocab, state, "best", {"clip_dims": [8, 16, 16]})
    ckpt = load_checkpoint(tmp_path / "c.sltk")
    clips = rng.random((2, 3, 8, 16, 16)).astype(np.float32)
    dec = shift_right(np.array([[4, 5, 2], [6, 2, 0]]))
    with no_grad():
        a = model.eval()(clips, dec).data
        b = ckpt.model.eval()(clips, dec).data
    assert np.array_equal(a, b)
    assert ckpt.tag == "best" and ckpt.state.global_step == 3 and ckpt.extra["clip_dims"] == [8, 16, 16]
    assert ckpt.vocab.itos == vocab.itos
    for n in state.adam.m:
        assert np.array_equal(ckpt.state.adam.m[n], state.adam.m[n])
        assert np.array_equal(ckpt.state.adam.v[n], state.adam.v[n])


def test_checkpoint_format_errors(tmp_path):
    ds, vocab = desk_data(2)
    path = tmp_path / "c.sltk"
    save_checkpoint(path, desk_model(vocab), vocab, TrainState())
    blob = path.read_bytes()
    for bad in (blob[:-5], blob[:4] + (9).to_bytes(4, "little") + blob[8:], b"XXXX" + blob[4:]):
        path.write_bytes(bad)
        with pytest.raises(FormatError):
            load_checkpoint(path)
