"""Optimizer, training loop and checkpoints."""

from .adam import AdamState, adam_step, clip_by_global_norm, global_norm, lr_schedule
from .checkpoint import (
    MODEL_KINDS,
    Checkpoint,
    TrainerPosition,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
)
from .trainer import (
    TrainResult,
    epoch_batches,
    evaluate_sequences,
    kl_weight_at,
    make_batches,
    prepare_corpus,
    train,
    train_on_corpus,
)

__all__ = [
    "AdamState",
    "adam_step",
    "clip_by_global_norm",
    "global_norm",
    "lr_schedule",
    "MODEL_KINDS",
    "Checkpoint",
    "TrainerPosition",
    "decode_checkpoint",
    "encode_checkpoint",
    "load_checkpoint",
    "model_from_checkpoint",
    "save_checkpoint",
    "TrainResult",
    "epoch_batches",
    "evaluate_sequences",
    "kl_weight_at",
    "make_batches",
    "prepare_corpus",
    "train",
    "train_on_corpus",
]
