from .checkpoint import Checkpoint, TrainState, load_checkpoint, save_checkpoint
from .loop import accumulate_gradients, perplexity, train_loop
from .loss import label_smoothed_ce, smoothed_targets, token_nll
from .optim import AdamState, OptimConfig, adam_step, noam_lr

__all__ = [
    "AdamState", "Checkpoint", "OptimConfig", "TrainState", "accumulate_gradients", "adam_step",
    "label_smoothed_ce", "load_checkpoint", "noam_lr", "perplexity", "save_checkpoint",
    "smoothed_targets", "token_nll", "train_loop",
]
