"""The whole command-line workflow in a scratch directory.

Generates a corpus, builds vocabularies, trains with a config file, evaluates
with per-set-size buckets, and decodes new text with an attention sidecar.
Calls the same entry point as the installed ``seq2label`` command, so every
printed block below is exactly what the shell equivalent produces.
"""

import json
import os
import tempfile

from seq2label.cli import main

work = tempfile.mkdtemp(prefix="seq2label-demo-")
os.chdir(work)
print(f"working in {work}")


def run(argv):
    print(f"\n$ seq2label {' '.join(argv)}")
    code = main(argv)
    print(f"(exit code {code})")
    return code


# a small corpus to play with: 20 documents, 5 labels
run(["synth", "--out", "corpus.jsonl"])

run(["build-vocab", "--train", "corpus.jsonl",
     "--vocab", "vocab.tsv", "--label-vocab", "labels.tsv"])

# flags beat the config file, which beats built-in defaults
with open("run.cfg", "w") as f:
    f.write(
        "# demo training setup\n"
        "embed-size = 24\n"
        "encoder-hidden = 24\n"
        "decoder-hidden = 24\n"
        "epochs = 80\n"
        "learning-rate = 0.005\n"
        "batch-size = 8\n"
    )
run(["train", "--config", "run.cfg", "--train", "corpus.jsonl",
     "--vocab", "vocab.tsv", "--label-vocab", "labels.tsv",
     "--checkpoint", "model.ckpt", "--seed", "0"])

run(["evaluate", "--checkpoint", "model.ckpt", "--test", "corpus.jsonl",
     "--beam", "3", "--lls-buckets", "--out", "metrics.json"])
print(open("metrics.json").read())

# first line reuses doc05's tokens in a new order, second is all unknown words
with open("new.jsonl", "w") as f:
    f.write(json.dumps({"text": "doc05 f20 f21 f22 f23"}) + "\n")
    f.write(json.dumps({"text": "mystery words only"}) + "\n")
run(["predict", "--checkpoint", "model.ckpt", "--input", "new.jsonl",
     "--beam", "3", "--out", "pred.jsonl", "--attn", "attn.jsonl"])
print(open("pred.jsonl").read())

attn = json.loads(open("attn.jsonl").readline())
print("attention over source tokens for the first prediction:")
for label, row in zip(attn["labels"], attn["weights"]):
    cells = "  ".join(f"{t}:{w:.2f}" for t, w in zip(attn["tokens"], row))
    print(f"  {label:8s} {cells}")

# data problems exit with code 2 and a line-numbered message
with open("broken.jsonl", "w") as f:
    f.write('{"text": "fine", "labels": ["alpha"]}\nnot json at all\n')
run(["evaluate", "--checkpoint", "model.ckpt", "--test", "broken.jsonl"])
