"""Training end to end on the built-in synthetic corpora.

Part one overfits a 20-document corpus until the model reproduces every label
set from memory. Part two trains on documents where one label always implies
a second and then watches the decoder hand probability to the partner label
on held-out text. Both runs are seeded and take well under a minute.
"""

import numpy as np

from seq2label import corpus, synthetic
from seq2label.inference import decode_with_trace, predict_set
from seq2label.metrics import score
from seq2label.model import ModelConfig, Seq2LabelModel
from seq2label.numerics import RngStream
from seq2label.trainer import TrainConfig, fit

print("== part 1: memorizing a tiny corpus ==")
records = synthetic.memorization_corpus(0)
vocab, labels = corpus.build_vocab(records, 50000)
examples = corpus.encode_examples(records, vocab, labels)
print(f"{len(examples)} documents, {len(vocab) - 2} tokens, {len(labels)} labels")

model = Seq2LabelModel(
    ModelConfig(embed_size=24, encoder_hidden=24, decoder_hidden=24),
    len(vocab), len(labels), RngStream(0),
)
train_config = TrainConfig(epochs=80, batch_size=8, learning_rate=0.005, seed=0)
report = fit(model, examples, None, train_config, labels)
shown = [0, len(report.train_loss) // 2, len(report.train_loss) - 1]
for e in shown:
    print(f"epoch {e + 1:3d}: loss {report.train_loss[e]:.4f}")

pairs = []
for ex in examples:
    pred, _ = predict_set(model, ex.token_ids, 1, report.max_label_steps)
    pairs.append((set(ex.label_ids), set(pred)))
result = score(pairs, len(labels))
print(f"training-set micro-F1 {result.micro_f1:.3f}, hamming loss {result.hamming_loss:.3f}")

doc = records[3]
pred, _ = predict_set(model, examples[3].token_ids, 1, report.max_label_steps)
print(f"doc 3 text: {doc['text']!r}")
print(f"  true {sorted(doc['labels'])}")
print(f"  predicted {sorted(labels.label_of(i) for i in pred)}")

print()
print("== part 2: a learned label correlation ==")
train_records, held_records = synthetic.correlated_pair_corpus(0)
vocab2, labels2 = corpus.build_vocab(train_records, 50000)
train_examples = corpus.encode_examples(train_records, vocab2, labels2)
held_examples = corpus.encode_examples(held_records, vocab2, labels2)
print(f"{len(train_examples)} training documents; alpha never appears without beta")

model2 = Seq2LabelModel(
    ModelConfig(embed_size=20, encoder_hidden=20, decoder_hidden=20),
    len(vocab2), len(labels2), RngStream(1),
)
fit(model2, train_examples, None, TrainConfig(epochs=40, batch_size=8, seed=1), labels2)

alpha, beta = labels2.id_of("alpha"), labels2.id_of("beta")
probs = []
for ex in held_examples:
    seq, dists, _ = decode_with_trace(model2, ex.token_ids, len(labels2) + 1)
    for t, cls in enumerate(seq):
        if cls == alpha and t + 1 < len(dists):
            probs.append(float(dists[t + 1][beta]))
            break
print(f"held-out documents where alpha was emitted: {len(probs)}/{len(held_examples)}")
print(f"mean P(beta | just emitted alpha) = {np.mean(probs):.3f}")
