"""Optimization loop: bucketed minibatches, ADAM, metrics and checkpoints."""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from ..errors import ContractError, InkDataError, NumericError
from ..ink.preprocess import compute_stats, encode_corpus, split_corpus, train_validation_split
from ..models import Corpus, EncodedSequence, LossBreakdown, NormStats, TrainConfig
from ..nn import InkModel
from ..storage import atomic_write_text
from .adam import AdamState, adam_step, clip_by_global_norm, lr_schedule
from .checkpoint import MODEL_KINDS, Checkpoint, TrainerPosition, save_checkpoint

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class TrainResult:
    model: InkModel
    position: TrainerPosition
    history: List[LossBreakdown] = field(default_factory=list)
    validation: List[float] = field(default_factory=list)
    stats: Optional[NormStats] = None


def kl_weight_at(step: int, cfg: TrainConfig) -> float:
    """Linear warm-up from 0 to cfg.kl_weight over the first kl_warmup_steps steps."""
    if cfg.kl_warmup_steps == 0:
        return cfg.kl_weight
    return cfg.kl_weight * min(1.0, (step + 1) / cfg.kl_warmup_steps)


def make_batches(lengths: Sequence[int], batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Group similar lengths: shuffle, sort stably by length, cut, then shuffle the batch order."""
    lengths = np.asarray(lengths)
    order = rng.permutation(len(lengths))
    order = order[np.argsort(lengths[order], kind="stable")]
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    return [batches[j] for j in rng.permutation(len(batches))]


def epoch_batches(sequences: Sequence[EncodedSequence], cfg: TrainConfig, epoch: int) -> List[np.ndarray]:
    """Length-grouped batches for one epoch, seeded by (seed, epoch)."""
    return make_batches([len(s) for s in sequences], cfg.batch_size, np.random.default_rng([cfg.seed, epoch]))


def metrics_record(step: int, lr: float, breakdown: LossBreakdown, wall_ms: float) -> str:
    """One compact JSON line for the metrics log."""
    record = {"step": step, "lr": lr, **breakdown.to_dict(), "wall_ms": round(wall_ms, 3)}
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _read_metrics(path: Optional[PathLike], keep: int) -> List[str]:
    if path is None or keep == 0 or not Path(path).exists():
        return []
    return Path(path).read_text(encoding="utf-8").splitlines()[:keep]


def _write_metrics(path: Optional[PathLike], lines: List[str]):
    if path is not None:
        atomic_write_text(path, "".join(line + "\n" for line in lines))


def evaluate_sequences(model: InkModel, sequences: Sequence[EncodedSequence], cfg: TrainConfig) -> float:
    """Mean total loss over sequences, with the configured KL weight."""
    if not sequences:
        raise InkDataError("no sequences to evaluate")
    total = 0.0
    for start in range(0, len(sequences), cfg.batch_size):
        batch = list(sequences[start:start + cfg.batch_size])
        breakdown = model.evaluate(batch, cfg.kl_weight, seed=cfg.seed, step=start, threads=cfg.threads)
        total += breakdown.total * len(batch)
    return total / len(sequences)


def train(model: InkModel, sequences: Sequence[EncodedSequence], cfg: TrainConfig,
          checkpoint_path: Optional[PathLike] = None, metrics_path: Optional[PathLike] = None,
          stats: Optional[NormStats] = None, validation: Sequence[EncodedSequence] = (),
          resume: Optional[Checkpoint] = None) -> TrainResult:
    """Run epochs of seeded minibatches until cfg.epochs or cfg.max_steps.

    Noise is drawn per (seed, step, item) and batch order per (seed, epoch), so
    a run resumed from a checkpoint continues exactly where it stopped. A
    numeric failure writes the metrics so far and re-raises, leaving the last
    checkpoint on disk.
    """
    if not sequences:
        raise InkDataError("no training sequences")
    position = TrainerPosition(seed=cfg.seed)
    adam = AdamState.zeros(model.params)
    if resume is not None:
        if resume.kind != model.kind:
            raise ContractError(f"cannot resume a {model.kind} run from a {resume.kind} checkpoint")
        model = resume.build_model()
        position = TrainerPosition(resume.position.step, resume.position.epoch, cfg.seed, resume.position.batch)
        adam = resume.adam or AdamState.zeros(model.params)
        stats = stats or resume.stats
        logger.info(f"Resuming {model.kind} at step {position.step}, epoch {position.epoch}")

    metrics = _read_metrics(metrics_path, position.step)
    history: List[LossBreakdown] = []
    validation_losses: List[float] = []

    def checkpoint():
        if checkpoint_path is not None:
            save_checkpoint(checkpoint_path, Checkpoint(model.kind, model.config, model.alphabet, model.params,
                                                        stats, TrainerPosition(**vars(position)), adam))
        _write_metrics(metrics_path, metrics)

    def out_of_steps() -> bool:
        return cfg.max_steps is not None and position.step >= cfg.max_steps

    logger.info(f"Training {model.describe()} on {len(sequences)} sequences")
    while position.epoch < cfg.epochs and not out_of_steps():
        batches = epoch_batches(sequences, cfg, position.epoch)
        epoch_totals = []
        for indices in batches[position.batch:]:
            if out_of_steps():
                break
            batch = [sequences[i] for i in indices]
            lr = lr_schedule(position.step, cfg)
            started = time.perf_counter()
            try:
                breakdown, grads = model.training_step(batch, kl_weight_at(position.step, cfg), seed=cfg.seed,
                                                       step=position.step, threads=cfg.threads)
            except NumericError as e:
                logger.error(f"Numeric failure at step {position.step}: {e}; keeping the last checkpoint")
                _write_metrics(metrics_path, metrics)
                raise
            if cfg.grad_clip is not None:
                grads, norm = clip_by_global_norm(grads, cfg.grad_clip)
                if norm > cfg.grad_clip:
                    logger.warning(f"Step {position.step}: gradient norm {norm:.3f} clipped to {cfg.grad_clip}")
            params, adam = adam_step(model.params, grads, adam, lr)
            model.params = params
            wall_ms = (time.perf_counter() - started) * 1000.0

            metrics.append(metrics_record(position.step, lr, breakdown, wall_ms))
            history.append(breakdown)
            epoch_totals.append(breakdown.total)
            position.step += 1
            position.batch += 1

        if position.batch < len(batches):
            break
        position.epoch += 1
        position.batch = 0
        if epoch_totals:
            logger.info(f"Epoch {position.epoch}/{cfg.epochs}: mean total loss {np.mean(epoch_totals):.4f} "
                        f"over {len(epoch_totals)} steps")
        if validation:
            validation_losses.append(evaluate_sequences(model, validation, cfg))
            logger.info(f"Epoch {position.epoch}: validation loss {validation_losses[-1]:.4f}")
        if position.epoch % cfg.checkpoint_every == 0:
            checkpoint()

    checkpoint()
    logger.info(f"Finished after {position.step} steps ({position.epoch} full epochs)")
    return TrainResult(model, position, history, validation_losses, stats)


def prepare_corpus(corpus: Corpus, cfg: TrainConfig, stats: Optional[NormStats] = None):
    """Split long samples, hold out a validation part and encode both with training statistics."""
    corpus = split_corpus(corpus)
    train_part, val_part = train_validation_split(corpus, cfg.validation_fraction, cfg.seed)
    stats = stats or compute_stats(train_part)
    return encode_corpus(train_part, stats), encode_corpus(val_part, stats), stats


def train_on_corpus(kind: str, corpus: Corpus, model_config, cfg: TrainConfig,
                    checkpoint_path: Optional[PathLike] = None, metrics_path: Optional[PathLike] = None,
                    stats: Optional[NormStats] = None, resume: Optional[Checkpoint] = None) -> TrainResult:
    """Build a fresh model of the given kind and train it on a raw corpus."""
    if kind not in MODEL_KINDS:
        raise ContractError(f"unknown model kind {kind!r}")
    if resume is not None:
        stats = stats or resume.stats
    sequences, validation, stats = prepare_corpus(corpus, cfg, stats)
    model = MODEL_KINDS[kind](model_config, corpus.alphabet, seed=cfg.seed)
    return train(model, sequences, cfg, checkpoint_path, metrics_path, stats, validation, resume)
