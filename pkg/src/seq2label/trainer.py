"""Teacher-forced training loop with Adam, clipping, and best-epoch selection."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import corpus, inference, metrics
from .corpus import Batch, Example, LabelVocabulary
from .errors import ConfigError, NumericError
from .model import ModelConfig, Seq2LabelModel
from .numerics import RngStream, Tensor, adam_step, clip_gradients, cross_entropy


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 8
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 10.0
    seed: int = 0
    no_mask: bool = False
    shuffle_labels: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise ConfigError(f"betas must be in [0, 1), got {self.beta1}, {self.beta2}")
        if self.adam_eps <= 0:
            raise ConfigError(f"adam_eps must be positive, got {self.adam_eps}")
        if self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be positive, got {self.clip_norm}")


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    valid_f1: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    selected_epoch: int = 0
    best_valid_f1: float = 0.0
    max_label_steps: int = 1


def apply_ablation(model_config: ModelConfig, train_config: TrainConfig) -> ModelConfig:
    """Fold the mask ablation switch into the model configuration."""
    if train_config.no_mask and model_config.use_mask:
        return replace(model_config, use_mask=False)
    return model_config


def sequence_loss(
    model: Seq2LabelModel,
    token_ids: np.ndarray,
    framed: list[int],
    train: bool = False,
    rng: RngStream | None = None,
) -> Tensor:
    """Sum of per-step cross-entropies under teacher forcing.

    ``framed`` starts with the start marker and ends with the terminal class;
    each step's chosen class is the ground-truth target, while the blended
    input embedding still sees the model's own previous distribution.
    """
    if len(framed) < 2:
        raise ConfigError(f"framed sequence needs at least one target, got {framed}")
    enc = model.encode(token_ids, train, rng)
    state = model.init_state()
    loss: Tensor | None = None
    for target in framed[1:]:
        state, y, _ = model.decoder_step(state, enc, train, rng)
        step = cross_entropy(y, int(target))
        loss = step if loss is None else loss + step
        state = model.advance(state, int(target))
    return loss


def _batch_rows(batch: Batch):
    for j in range(len(batch)):
        tokens = batch.token_ids[j, : batch.lengths[j]]
        framed = [int(v) for v in batch.label_seqs[j, : batch.label_lengths[j]]]
        yield tokens, framed


def train_epoch(
    model: Seq2LabelModel, batches: list[Batch], config: TrainConfig, rng: RngStream
) -> float:
    """One pass over the batches; returns the mean per-example loss."""
    total = 0.0
    count = 0
    for bi, batch in enumerate(batches):
        model.params.zero_grads()
        batch_sum: Tensor | None = None
        for tokens, framed in _batch_rows(batch):
            loss = sequence_loss(model, tokens, framed, train=True, rng=rng)
            batch_sum = loss if batch_sum is None else batch_sum + loss
        batch_loss = batch_sum * (1.0 / len(batch))
        if not np.isfinite(batch_loss.data):
            raise NumericError(f"non-finite loss in batch {bi}")
        batch_loss.backward()
        clip_gradients(model.params, config.clip_norm)
        adam_step(model.params, config.learning_rate, config.beta1, config.beta2, config.adam_eps)
        total += batch_sum.item()
        count += len(batch)
    return total / count


def _ordered_targets(
    examples: list[Example], label_vocab: LabelVocabulary, shuffle: bool, rng: RngStream
) -> list[tuple[np.ndarray, list[int]]]:
    framed = []
    for ex in examples:
        if shuffle:
            ordered = corpus.shuffle_labels(ex.label_ids, rng)
        else:
            ordered = corpus.sort_labels(ex.label_ids, label_vocab)
        framed.append((ex.token_ids, corpus.frame_labels(ordered, label_vocab)))
    return framed


def evaluate_greedy(
    model: Seq2LabelModel, examples: list[Example], max_steps: int
) -> float:
    """Micro-F1 of greedy decoding against the reference label sets."""
    pairs = []
    for ex in examples:
        seq, _ = inference.greedy_decode(model, ex.token_ids, max_steps)
        pred = inference.extract_label_set(seq, model.eos_class)
        pairs.append((set(ex.label_ids), set(pred)))
    return metrics.micro_prf(pairs)[2]


def fit(
    model: Seq2LabelModel,
    train_examples: list[Example],
    valid_examples: list[Example] | None,
    config: TrainConfig,
    label_vocab: LabelVocabulary,
) -> TrainReport:
    """Train for ``config.epochs`` epochs and keep the best-validation weights.

    One seeded stream drives label shuffling, batch order, and dropout, so a
    (seed, config, corpus) triple pins down every float of the run. The best
    epoch is the earliest one with the strictly highest validation micro-F1
    (the last epoch when there is no validation set).
    """
    if config.no_mask and model.config.use_mask:
        raise ConfigError("no_mask is set but the model was built with masking; apply_ablation first")
    if not train_examples:
        raise ConfigError("no training examples")
    rng = RngStream(config.seed)
    framed = _ordered_targets(train_examples, label_vocab, config.shuffle_labels, rng)
    report = TrainReport(max_label_steps=max(len(ex.label_ids) for ex in train_examples) + 1)
    best_values = None
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        batches = corpus.make_batches(framed, config.batch_size, rng)
        report.train_loss.append(train_epoch(model, batches, config, rng))
        if valid_examples:
            f1 = evaluate_greedy(model, valid_examples, report.max_label_steps)
            report.valid_f1.append(f1)
            if f1 > report.best_valid_f1 or best_values is None:
                report.best_valid_f1 = f1
                report.selected_epoch = epoch
                best_values = model.params.copy_values()
        report.epoch_seconds.append(time.perf_counter() - start)
    if valid_examples:
        model.params.load_values(best_values)
    else:
        report.selected_epoch = config.epochs
    return report
