"""Decoding: greedy, beam search, and attention extraction.

Scores are plain sums of log-probabilities with no length normalization; the
mask guarantees no duplicate real labels, and hypotheses end when the terminal
class is emitted. Beam search keeps the ``beam_size`` best children across all
live hypotheses per step, so a beam of one reproduces greedy decoding exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import DecoderState, EncoderOutput, Seq2LabelModel
from .numerics import no_grad


@dataclass
class BeamHypothesis:
    sequence: tuple[int, ...]     # emitted classes, terminal id included once finished
    log_prob: float
    state: DecoderState
    finished: bool = False


@dataclass
class AttentionTrace:
    token_ids: np.ndarray
    label_ids: list[int]          # real labels only, in emission order
    weights: np.ndarray           # (len(label_ids), source length), rows sum to 1


def _sort_key(h: BeamHypothesis):
    # deterministic: best log-prob first, then shorter, then lexicographic
    return (-h.log_prob, len(h.sequence), h.sequence)


def greedy_decode(
    model: Seq2LabelModel, token_ids: np.ndarray, max_steps: int
) -> tuple[list[int], float]:
    """Follow the argmax at every step; ties go to the lowest class id.

    Returns (sequence, log_prob). The sequence includes the terminal class
    when it was emitted within ``max_steps``.
    """
    if max_steps < 1:
        raise ConfigError(f"max_steps must be positive, got {max_steps}")
    with no_grad():
        enc = model.encode(token_ids)
        state = model.init_state()
        seq: list[int] = []
        total = 0.0
        for _ in range(max_steps):
            state, y, _ = model.decoder_step(state, enc)
            cls = int(np.argmax(y.data))
            total += math.log(float(y.data[cls]))
            seq.append(cls)
            if cls == model.eos_class:
                break
            state = model.advance(state, cls)
    return seq, total


def beam_search(
    model: Seq2LabelModel, token_ids: np.ndarray, beam_size: int = 5, max_steps: int | None = None
) -> tuple[list[int], float]:
    """Best label sequence under beam search; returns (sequence, log_prob).

    Each step expands every live hypothesis over all classes with nonzero
    probability, keeps the ``beam_size`` best children overall, and moves the
    ones that chose the terminal class into the finished pool. The search
    stops once the pool holds ``beam_size`` finished sequences or nothing is
    left to expand. Hypotheses still live at ``max_steps`` are force-finished
    by charging them the terminal class's log-probability one step later.
    """
    if beam_size < 1:
        raise ConfigError(f"beam_size must be positive, got {beam_size}")
    if max_steps is None:
        max_steps = model.num_labels + 1
    if max_steps < 1:
        raise ConfigError(f"max_steps must be positive, got {max_steps}")
    with no_grad():
        enc = model.encode(token_ids)
        live = [BeamHypothesis(sequence=(), log_prob=0.0, state=model.init_state())]
        finished: list[BeamHypothesis] = []
        for _ in range(max_steps):
            children: list[BeamHypothesis] = []
            for hyp in live:
                state, y, _ = model.decoder_step(hyp.state, enc)
                for cls in range(model.num_labels + 1):
                    p = float(y.data[cls])
                    if p == 0.0:
                        continue
                    children.append(
                        BeamHypothesis(
                            sequence=hyp.sequence + (cls,),
                            log_prob=hyp.log_prob + math.log(p),
                            state=state,
                            finished=cls == model.eos_class,
                        )
                    )
            children.sort(key=_sort_key)
            live = []
            for child in children[:beam_size]:
                if child.finished:
                    finished.append(child)
                else:
                    live.append(
                        BeamHypothesis(
                            sequence=child.sequence,
                            log_prob=child.log_prob,
                            state=model.advance(child.state, child.sequence[-1]),
                        )
                    )
            if len(finished) >= beam_size or not live:
                break
        # out of steps: close out survivors with the terminal class
        for hyp in live:
            _, y, _ = model.decoder_step(hyp.state, enc)
            finished.append(
                BeamHypothesis(
                    sequence=hyp.sequence + (model.eos_class,),
                    log_prob=hyp.log_prob + math.log(float(y.data[model.eos_class])),
                    state=hyp.state,
                    finished=True,
                )
            )
        best = min(finished, key=_sort_key)
    return list(best.sequence), best.log_prob


def decode_with_trace(
    model: Seq2LabelModel, token_ids: np.ndarray, max_steps: int
) -> tuple[list[int], list[np.ndarray], list[np.ndarray]]:
    """Greedy decode that also returns per-step distributions and attention."""
    if max_steps < 1:
        raise ConfigError(f"max_steps must be positive, got {max_steps}")
    with no_grad():
        enc = model.encode(token_ids)
        state = model.init_state()
        seq: list[int] = []
        dists: list[np.ndarray] = []
        attns: list[np.ndarray] = []
        for _ in range(max_steps):
            state, y, alpha = model.decoder_step(state, enc)
            dists.append(y.data.copy())
            attns.append(alpha.data.copy())
            cls = int(np.argmax(y.data))
            seq.append(cls)
            if cls == model.eos_class:
                break
            state = model.advance(state, cls)
    return seq, dists, attns


def extract_label_set(sequence: list[int], eos_class: int) -> list[int]:
    """Real labels from a decoded sequence, first-emission order, no repeats."""
    out: list[int] = []
    seen = set()
    for cls in sequence:
        if cls == eos_class:
            break
        if cls not in seen:
            seen.add(cls)
            out.append(cls)
    return out


def export_attention(
    model: Seq2LabelModel, token_ids: np.ndarray, sequence: list[int]
) -> AttentionTrace:
    """Attention rows behind each real-label emission of ``sequence``.

    Replays the decoder with the given classes forced, so the trace matches
    whatever search produced the sequence. One row per real label; the
    terminal step, if present, is dropped.
    """
    with no_grad():
        enc = model.encode(token_ids)
        state = model.init_state()
        labels = []
        rows = []
        for cls in sequence:
            state, _, alpha = model.decoder_step(state, enc)
            if cls == model.eos_class:
                break
            labels.append(cls)
            rows.append(alpha.data.copy())
            state = model.advance(state, cls)
    weights = np.stack(rows) if rows else np.zeros((0, len(token_ids)))
    return AttentionTrace(token_ids=np.asarray(token_ids), label_ids=labels, weights=weights)


def predict_set(
    model: Seq2LabelModel,
    token_ids: np.ndarray,
    beam_size: int,
    max_steps: int,
) -> tuple[list[int], float]:
    """Decode and reduce to a label set; beam 1 routes through greedy."""
    if beam_size == 1:
        seq, logp = greedy_decode(model, token_ids, max_steps)
    else:
        seq, logp = beam_search(model, token_ids, beam_size, max_steps)
    return extract_label_set(seq, model.eos_class), logp
