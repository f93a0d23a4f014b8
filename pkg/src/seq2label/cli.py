"""Command-line entry points: build-vocab, train, evaluate, predict, ablate.

Options resolve in three layers: built-in defaults, then a ``key=value``
config file given with --config, then explicit command-line flags. Exit codes
are 0 for success, 1 for usage or configuration problems, 2 for data problems,
and 3 for numeric failures at run time.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace

from . import corpus, inference, metrics, synthetic, trainer
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .corpus import LabelVocabulary, Vocabulary
from .errors import ConfigError, DataError, NumericError
from .model import ModelConfig, Seq2LabelModel
from .numerics import RngStream
from .trainer import TrainConfig


@dataclass
class RunConfig:
    """Flat bag of every option any subcommand reads."""

    # paths
    train: str | None = None
    valid: str | None = None
    test: str | None = None
    input: str | None = None
    vocab: str | None = None
    label_vocab: str | None = None
    checkpoint: str | None = None
    out: str | None = None
    report: str | None = None
    attn: str | None = None
    # data
    vocab_size: int = 50000
    max_len: int = 500
    # model
    embed_size: int = 64
    encoder_hidden: int = 64
    decoder_hidden: int = 64
    encoder_layers: int = 1
    decoder_layers: int = 1
    dropout: float = 0.0
    ge_mode: str = "off"
    ge_lambda: float = 0.5
    # training
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
    # decoding / reporting
    beam: int = 5
    max_steps: int | None = None
    lls_buckets: bool = False
    lambda_list: str = "0.0,0.5,1.0"

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            embed_size=self.embed_size,
            encoder_hidden=self.encoder_hidden,
            decoder_hidden=self.decoder_hidden,
            encoder_layers=self.encoder_layers,
            decoder_layers=self.decoder_layers,
            dropout=self.dropout,
            ge_mode=self.ge_mode,
            ge_lambda=self.ge_lambda,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
            clip_norm=self.clip_norm,
            seed=self.seed,
            no_mask=self.no_mask,
            shuffle_labels=self.shuffle_labels,
        )


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse {text!r} as a boolean")


def _parse_optional_int(text: str) -> int | None:
    return None if text.strip().lower() == "none" else int(text)


_STR_FIELDS = {
    "train", "valid", "test", "input", "vocab", "label_vocab",
    "checkpoint", "out", "report", "attn", "ge_mode", "lambda_list",
}
_BOOL_FIELDS = {"no_mask", "shuffle_labels", "lls_buckets"}
_FLOAT_FIELDS = {"dropout", "ge_lambda", "learning_rate", "beta1", "beta2", "adam_eps", "clip_norm"}


def _field_parser(name: str):
    if name in _STR_FIELDS:
        return str
    if name in _BOOL_FIELDS:
        return _parse_bool
    if name in _FLOAT_FIELDS:
        return float
    if name == "max_steps":
        return _parse_optional_int
    return int


def read_config_file(path: str) -> dict:
    """Flat key=value file; blank lines and '#' comments are skipped."""
    known = {f.name for f in fields(RunConfig)}
    values: dict = {}
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path} line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key not in known:
            raise ConfigError(f"{path} line {lineno}: unknown option {key!r}")
        try:
            values[key] = _field_parser(key)(value)
        except ValueError:
            raise ConfigError(f"{path} line {lineno}: bad value {value!r} for {key}") from None
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config-file values, then explicitly passed flags."""
    cfg = RunConfig()
    if args.config:
        cfg = replace(cfg, **read_config_file(args.config))
    known = {f.name for f in fields(RunConfig)}
    overrides = {
        k: v for k, v in vars(args).items() if k in known and v is not None
    }
    cfg = replace(cfg, **overrides)
    if getattr(args, "greedy", None):
        cfg = replace(cfg, beam=1)
    return cfg


def _require(cfg: RunConfig, names: list[str], command: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ConfigError(f"{command} requires {flags}")


def _load_records(path: str, require_labels: bool = True) -> list[dict]:
    try:
        return corpus.load_jsonl(path, require_labels=require_labels)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror}") from None


def _write_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False)
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


# -- subcommands ----------------------------------------------------------------


def cmd_build_vocab(cfg: RunConfig) -> int:
    _require(cfg, ["train", "vocab", "label_vocab"], "build-vocab")
    records = _load_records(cfg.train)
    vocab, label_vocab = corpus.build_vocab(records, cfg.vocab_size)
    vocab.save(cfg.vocab)
    label_vocab.save(cfg.label_vocab)
    _write_json(
        {
            "examples": len(records),
            "tokens": len(vocab) - 2,
            "labels": len(label_vocab),
        },
        cfg.out,
    )
    return 0


def _load_or_build_vocabs(cfg: RunConfig, records: list[dict]) -> tuple[Vocabulary, LabelVocabulary]:
    have_both = (
        cfg.vocab and os.path.exists(cfg.vocab)
        and cfg.label_vocab and os.path.exists(cfg.label_vocab)
    )
    if have_both:
        return Vocabulary.load(cfg.vocab), LabelVocabulary.load(cfg.label_vocab)
    vocab, label_vocab = corpus.build_vocab(records, cfg.vocab_size)
    if cfg.vocab:
        vocab.save(cfg.vocab)
    if cfg.label_vocab:
        label_vocab.save(cfg.label_vocab)
    return vocab, label_vocab


def cmd_train(cfg: RunConfig) -> int:
    _require(cfg, ["train", "checkpoint"], "train")
    records = _load_records(cfg.train)
    vocab, label_vocab = _load_or_build_vocabs(cfg, records)
    train_examples = corpus.encode_examples(records, vocab, label_vocab, cfg.max_len)
    valid_examples = None
    if cfg.valid:
        valid_examples = corpus.encode_examples(
            _load_records(cfg.valid), vocab, label_vocab, cfg.max_len
        )

    train_config = cfg.train_config()
    model_config = trainer.apply_ablation(cfg.model_config(), train_config)
    model = Seq2LabelModel(model_config, len(vocab), len(label_vocab), RngStream(cfg.seed))
    report = trainer.fit(model, train_examples, valid_examples, train_config, label_vocab)

    for epoch, loss in enumerate(report.train_loss, start=1):
        line = f"epoch {epoch}: loss {loss:.6f}"
        if report.valid_f1:
            line += f", valid micro-F1 {report.valid_f1[epoch - 1]:.4f}"
        print(line)
    print(f"selected epoch {report.selected_epoch} (valid micro-F1 {report.best_valid_f1:.4f})")

    save_checkpoint(
        cfg.checkpoint,
        model,
        vocab,
        label_vocab,
        best_valid_f1=report.best_valid_f1,
        max_label_steps=report.max_label_steps,
    )
    print(f"checkpoint written to {cfg.checkpoint}")
    if cfg.report:
        _write_json(
            {
                "train_loss": report.train_loss,
                "valid_f1": report.valid_f1,
                "selected_epoch": report.selected_epoch,
                "best_valid_f1": report.best_valid_f1,
                "epoch_seconds": report.epoch_seconds,
                "max_label_steps": report.max_label_steps,
            },
            cfg.report,
        )
    return 0


def _decode_steps(cfg: RunConfig, ckpt: Checkpoint) -> int:
    return cfg.max_steps if cfg.max_steps is not None else ckpt.max_label_steps


def cmd_evaluate(cfg: RunConfig) -> int:
    _require(cfg, ["checkpoint", "test"], "evaluate")
    if cfg.beam < 1:
        raise ConfigError(f"beam must be at least 1, got {cfg.beam}")
    ckpt = load_checkpoint(cfg.checkpoint)
    examples = corpus.encode_examples(
        _load_records(cfg.test), ckpt.vocab, ckpt.label_vocab, cfg.max_len
    )
    max_steps = _decode_steps(cfg, ckpt)
    pairs = []
    for ex in examples:
        pred, _ = inference.predict_set(ckpt.model, ex.token_ids, cfg.beam, max_steps)
        pairs.append((set(ex.label_ids), set(pred)))
    report = metrics.score(pairs, len(ckpt.label_vocab))
    if cfg.lls_buckets:
        report.buckets = metrics.bucket_by_lls(pairs, len(ckpt.label_vocab))
    _write_json(report.as_dict(), cfg.out)
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    _require(cfg, ["checkpoint", "input"], "predict")
    if cfg.beam < 1:
        raise ConfigError(f"beam must be at least 1, got {cfg.beam}")
    ckpt = load_checkpoint(cfg.checkpoint)
    records = _load_records(cfg.input, require_labels=False)
    max_steps = _decode_steps(cfg, ckpt)

    out_f = open(cfg.out, "w", encoding="utf-8") if cfg.out else sys.stdout
    attn_f = open(cfg.attn, "w", encoding="utf-8") if cfg.attn else None
    try:
        for i, rec in enumerate(records):
            try:
                token_ids = corpus.encode_text(rec["text"], ckpt.vocab, cfg.max_len)
            except DataError as e:
                out_f.write(json.dumps({"index": i, "error": str(e)}) + "\n")
                continue
            if cfg.beam == 1:
                seq, log_prob = inference.greedy_decode(ckpt.model, token_ids, max_steps)
            else:
                seq, log_prob = inference.beam_search(ckpt.model, token_ids, cfg.beam, max_steps)
            label_ids = inference.extract_label_set(seq, ckpt.model.eos_class)
            names = [ckpt.label_vocab.label_of(l) for l in label_ids]
            out_f.write(json.dumps({"index": i, "labels": names, "log_prob": log_prob}) + "\n")
            if attn_f is not None:
                trace = inference.export_attention(ckpt.model, token_ids, seq)
                attn_f.write(
                    json.dumps(
                        {
                            "index": i,
                            "tokens": [ckpt.vocab.token_of(t) for t in token_ids],
                            "labels": [ckpt.label_vocab.label_of(l) for l in trace.label_ids],
                            "weights": [list(row) for row in trace.weights],
                        }
                    )
                    + "\n"
                )
    finally:
        if cfg.out:
            out_f.close()
        if attn_f is not None:
            attn_f.close()
    return 0


def _parse_lambda_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse lambda list {text!r}") from None
    if not values:
        raise ConfigError("lambda list is empty")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"lambda {v} outside [0, 1]")
    return values


def cmd_ablate(cfg: RunConfig) -> int:
    """Train and evaluate the base setup plus one variant per ablation switch."""
    _require(cfg, ["train", "test"], "ablate")
    if cfg.beam < 1:
        raise ConfigError(f"beam must be at least 1, got {cfg.beam}")
    lambdas = _parse_lambda_list(cfg.lambda_list)
    records = _load_records(cfg.train)
    vocab, label_vocab = _load_or_build_vocabs(cfg, records)
    train_examples = corpus.encode_examples(records, vocab, label_vocab, cfg.max_len)
    valid_examples = None
    if cfg.valid:
        valid_examples = corpus.encode_examples(
            _load_records(cfg.valid), vocab, label_vocab, cfg.max_len
        )
    test_examples = corpus.encode_examples(
        _load_records(cfg.test), vocab, label_vocab, cfg.max_len
    )

    variants: list[tuple[str, RunConfig]] = [("base", cfg)]
    variants.append(("no_mask", replace(cfg, no_mask=True)))
    variants.append(("shuffled_labels", replace(cfg, shuffle_labels=True)))
    for lam in lambdas:
        variants.append((f"lambda={lam:g}", replace(cfg, ge_mode="lambda", ge_lambda=lam)))

    results = {}
    for name, vcfg in variants:
        train_config = vcfg.train_config()
        model_config = trainer.apply_ablation(vcfg.model_config(), train_config)
        model = Seq2LabelModel(model_config, len(vocab), len(label_vocab), RngStream(vcfg.seed))
        report = trainer.fit(model, train_examples, valid_examples, train_config, label_vocab)
        max_steps = vcfg.max_steps if vcfg.max_steps is not None else report.max_label_steps
        pairs = []
        for ex in test_examples:
            pred, _ = inference.predict_set(model, ex.token_ids, vcfg.beam, max_steps)
            pairs.append((set(ex.label_ids), set(pred)))
        results[name] = metrics.score(pairs, len(label_vocab)).as_dict()
        print(f"{name}: test micro-F1 {results[name]['micro_f1']:.4f}", file=sys.stderr)
    _write_json({"variants": results}, cfg.out)
    return 0


def cmd_synth(cfg: RunConfig) -> int:
    """Write the generated corpora to JSONL files (developer utility)."""
    _require(cfg, ["out"], "synth")
    train, held = synthetic.correlated_pair_corpus(cfg.seed)
    corpus.write_jsonl(cfg.out, synthetic.memorization_corpus(cfg.seed))
    base, ext = os.path.splitext(cfg.out)
    corpus.write_jsonl(f"{base}-pairs-train{ext}", train)
    corpus.write_jsonl(f"{base}-pairs-heldout{ext}", held)
    return 0


# -- argument parsing ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="write JSON output here instead of stdout")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embed-size", type=int, default=None)
    p.add_argument("--encoder-hidden", type=int, default=None)
    p.add_argument("--decoder-hidden", type=int, default=None)
    p.add_argument("--encoder-layers", type=int, default=None)
    p.add_argument("--decoder-layers", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--ge-mode", choices=["off", "gate", "lambda"], default=None)
    p.add_argument("--ge-lambda", type=float, default=None)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train", default=None, help="training JSONL")
    p.add_argument("--valid", default=None, help="validation JSONL")
    p.add_argument("--vocab", default=None, help="token vocabulary file")
    p.add_argument("--label-vocab", default=None, help="label vocabulary file")
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--clip-norm", type=float, default=None)
    p.add_argument("--no-mask", action="store_true", default=None,
                   help="ablation: decode without the no-repeat mask")
    p.add_argument("--shuffle-labels", action="store_true", default=None,
                   help="ablation: random label order instead of frequency order")


def _add_decode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beam", type=int, default=None, help="beam size (default 5)")
    p.add_argument("--greedy", action="store_true", default=None, help="shorthand for --beam 1")
    p.add_argument("--max-steps", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seq2label", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-vocab", help="count tokens and labels, write both vocabularies")
    _add_common(p)
    p.add_argument("--train", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--label-vocab", default=None)
    p.add_argument("--vocab-size", type=int, default=None)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_common(p)
    _add_train_flags(p)
    _add_model_flags(p)
    p.add_argument("--checkpoint", default=None, help="checkpoint output path")
    p.add_argument("--report", default=None, help="write a JSON training report here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a labeled test set")
    _add_common(p)
    _add_decode_flags(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--test", default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--lls-buckets", action="store_true", default=None,
                   help="also report metrics per reference label-set size")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="decode label sets for unlabeled inputs")
    _add_common(p)
    _add_decode_flags(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--input", default=None, help="JSONL with a 'text' field per line")
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--attn", default=None, help="write per-label attention rows to this JSONL")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="train the base setup and its ablation variants")
    _add_common(p)
    _add_train_flags(p)
    _add_model_flags(p)
    _add_decode_flags(p)
    p.add_argument("--test", default=None)
    p.add_argument("--lambda-list", default=None,
                   help="comma-separated blend weights to sweep (default 0.0,0.5,1.0)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="write the built-in synthetic corpora as JSONL")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        return args.func(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
