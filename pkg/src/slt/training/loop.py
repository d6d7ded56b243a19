"""Joint training with token-weighted gradient accumulation and dev early stopping."""

from __future__ import annotations

import logging
import math
import os
from pathlib import Path
from typing import Callable

import numpy as np

from ..autodiff import backward, mul, no_grad
from ..data.batching import ClipDataset, batch_iter, epoch_plan
from ..data.vocab import Vocabulary
from ..errors import ContractError, NumericalError
from ..model import SignTranslationModel
from ..rng import SplitMix64
from ..seq2seq import shift_right
from .checkpoint import TrainState, save_checkpoint
from .loss import label_smoothed_ce, token_nll
from .optim import OptimConfig, adam_step, noam_lr

log = logging.getLogger(__name__)


def perplexity(model: SignTranslationModel, data: ClipDataset, batch_size: int = 10) -> float:
    """exp(unsmoothed NLL per non-PAD target token), dropout off."""
    if len(data) == 0:
        raise ContractError("perplexity needs a non-empty dataset")
    was_training = model.training
    model.eval()
    nll, count = 0.0, 0
    try:
        with no_grad():
            for batch in batch_iter(data, batch_size, shuffle=False):
                logits = model(batch.clips, shift_right(batch.target_ids))
                s, c = token_nll(logits.data, batch.target_ids, batch.target_mask)
                nll += s
                count += c
    finally:
        model.train(was_training)
    return math.exp(nll / count)


def accumulate_gradients(model: SignTranslationModel, batches, smoothing: float) -> float:
    """Backward over micro-batches; returns the smoothed loss per token.

    Each micro-batch adds (sum of its token losses) / (tokens in the whole
    group), so the accumulated gradient equals that of one combined batch.
    """
    total = sum(b.n_tokens for b in batches)
    if total == 0:
        raise ContractError("accumulation group has no target tokens")
    loss_sum = 0.0
    for b in batches:
        logits = model(b.clips, shift_right(b.target_ids))
        loss = label_smoothed_ce(logits, b.target_ids, b.target_mask, smoothing, reduction="sum")
        loss_sum += loss.item()
        backward(mul(loss, 1.0 / total))
    return loss_sum / total


def _write_row(fh, *values) -> None:
    fh.write("\t".join(str(v) for v in values) + "\n")
    fh.flush()


def train_loop(model: SignTranslationModel, train: ClipDataset, dev: ClipDataset, vocab: Vocabulary,
               cfg: OptimConfig, rng: SplitMix64, out_dir: str | os.PathLike,
               state: TrainState | None = None,
               on_epoch: Callable[[TrainState, float], None] | None = None,
               extra: dict | None = None) -> TrainState:
    """Train until dev perplexity stalls for ``cfg.patience`` epochs.

    Writes ``train_log.tsv`` (step, loss, lr), ``dev_log.tsv`` (epoch,
    dev_ppl), ``best.sltk`` on every improvement and ``periodic.sltk`` after
    every epoch. A final accumulation group shorter than ``accum_steps``
    still produces an update.
    """
    if len(train) == 0 or len(dev) == 0:
        raise ContractError("train and dev sets must be non-empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    state = state or TrainState()
    d_model = model.lang_cfg.d_model
    shuffle_rng, dropout_rng = rng.spawn(2)
    model.set_dropout_rng(dropout_rng)
    params = list(model.named_parameters())
    model.train()
    with open(out / "train_log.tsv", "w") as tlog, open(out / "dev_log.tsv", "w") as dlog:
        _write_row(tlog, "step", "loss", "lr")
        _write_row(dlog, "epoch", "dev_ppl")
        while state.epoch < cfg.max_epochs:
            if cfg.max_steps is not None and state.global_step >= cfg.max_steps:
                break
            state.epoch += 1
            plan = epoch_plan(len(train), cfg.batch_size, shuffle_rng)
            batches = batch_iter(train, cfg.batch_size, plan=plan, num_workers=cfg.num_workers)
            groups = [plan[i:i + cfg.accum_steps] for i in range(0, len(plan), cfg.accum_steps)]
            for group in groups:
                if cfg.max_steps is not None and state.global_step >= cfg.max_steps:
                    break
                micro = [next(batches) for _ in group]
                model.zero_grad()
                step = state.global_step + 1
                try:
                    loss = accumulate_gradients(model, micro, cfg.smoothing)
                except NumericalError as exc:
                    raise NumericalError(f"step {step}: {exc}") from None
                lr = noam_lr(step, d_model, cfg.warmup, cfg.lr_factor)
                adam_step(params, state.adam, lr, cfg)
                state.global_step = step
                _write_row(tlog, step, f"{loss:.6f}", f"{lr:.6e}")
            batches.close()
            model.zero_grad()
            ppl = perplexity(model, dev, cfg.batch_size)
            if not math.isfinite(ppl):
                raise NumericalError(f"epoch {state.epoch}: dev perplexity is {ppl}")
            _write_row(dlog, state.epoch, f"{ppl:.6f}")
            if ppl < state.best_dev_ppl:
                state.best_dev_ppl = ppl
                state.epochs_since_improve = 0
                save_checkpoint(out / "best.sltk", model, vocab, state, "best", extra)
            else:
                state.epochs_since_improve += 1
            save_checkpoint(out / "periodic.sltk", model, vocab, state, "periodic", extra)
            log.info("epoch %d step %d dev_ppl %.4f best %.4f", state.epoch, state.global_step,
                     ppl, state.best_dev_ppl)
            if on_epoch is not None:
                on_epoch(state, ppl)
            if state.epochs_since_improve >= cfg.patience:
                log.info("early stop after %d epochs without improvement", state.epochs_since_improve)
                break
    return state
