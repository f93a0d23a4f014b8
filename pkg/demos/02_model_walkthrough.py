"""Stepping the encoder and decoder by hand on an untrained model.

Shows the pieces inference is made of: bidirectional encoding, the attention
read at each decoder step, the mask knocking out already-emitted classes, and
how beam search relates to greedy decoding. Weights are random, so the
distributions are near-uniform; structure is the point, not the numbers.
"""

import numpy as np

from seq2label.corpus import LabelVocabulary, Vocabulary, encode_text
from seq2label.inference import beam_search, extract_label_set, greedy_decode
from seq2label.model import ModelConfig, Seq2LabelModel
from seq2label.numerics import RngStream

vocab = Vocabulary(
    ["the", "market", "rallied", "on", "earnings", "news"],
    [5, 4, 2, 3, 2, 2],
)
labels = LabelVocabulary(["economy", "markets", "companies"], [40, 30, 10])

config = ModelConfig(embed_size=6, encoder_hidden=5, decoder_hidden=6)
model = Seq2LabelModel(config, len(vocab), len(labels), RngStream(42))

tokens = encode_text("The market rallied on earnings news!", vocab)
print(f"token ids: {tokens.tolist()}")
print(f"output classes: {len(labels)} labels + terminal class {model.eos_class}")

print()
print("== encoding ==")
enc = model.encode(tokens)
print(f"encoder states: {enc.states.data.shape}  (positions x both directions)")

print()
print("== decoder steps, mask in action ==")
state = model.init_state()
for step in range(len(labels) + 1):
    state, y, alpha = model.decoder_step(state, enc)
    cls = int(np.argmax(y.data))
    name = labels.label_of(cls) if cls < len(labels) else "<end>"
    print(f"step {step}: p = {np.round(y.data, 3)}  attention = {np.round(alpha.data, 3)}")
    print(f"        -> emits {name}")
    if cls == model.eos_class:
        break
    state = model.advance(state, cls)
    # the emitted class now has -inf in the additive mask, so its probability
    # is exactly zero from here on
    struck = [i for i in range(len(labels)) if state.mask[i] == -np.inf]
    print(f"        masked so far: {[labels.label_of(i) for i in struck]}")

print()
print("== greedy vs beam ==")
g_seq, g_lp = greedy_decode(model, tokens, max_steps=len(labels) + 1)
b_seq, b_lp = beam_search(model, tokens, beam_size=4)
print(f"greedy:  {g_seq} (log-prob {g_lp:.4f})")
print(f"beam 4:  {b_seq} (log-prob {b_lp:.4f})")
print(f"beam 1 reproduces greedy: {beam_search(model, tokens, beam_size=1) == (g_seq, g_lp)}")
names = [labels.label_of(i) for i in extract_label_set(b_seq, model.eos_class)]
print(f"predicted label set: {names}")
