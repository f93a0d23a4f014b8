"""Multi-label text classification by generating label sequences.

The package trains an attention-based encoder-decoder that emits one label id
per step until a terminal class, with a mask that forbids repeats. Everything
runs on a small float64 autodiff core in ``seq2label.numerics``; no external
ML framework is involved.
"""

from .corpus import Example, LabelVocabulary, Vocabulary
from .errors import ConfigError, CorpusError, DataError, NumericError, ShapeError
from .inference import beam_search, extract_label_set, greedy_decode
from .metrics import MetricsReport, bucket_by_lls, hamming_loss, micro_prf
from .model import ModelConfig, Seq2LabelModel
from .trainer import TrainConfig, TrainReport, fit

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CorpusError",
    "DataError",
    "Example",
    "LabelVocabulary",
    "MetricsReport",
    "ModelConfig",
    "NumericError",
    "Seq2LabelModel",
    "ShapeError",
    "TrainConfig",
    "TrainReport",
    "Vocabulary",
    "beam_search",
    "bucket_by_lls",
    "extract_label_set",
    "fit",
    "greedy_decode",
    "hamming_loss",
    "micro_prf",
    "__version__",
]
