"""ASR evaluation toolkit: WER, CER and substitution-weighted WER (SW-WER)
with Persian-aware normalization, error taxonomy and metadata breakdowns."""

__version__ = "0.1.0"

from .align import levenshtein_align, levenshtein_distance, substitution_segments, summarize
from .metrics import (
    aggregate_corpus,
    compute_cer,
    compute_sw_wer,
    compute_wer,
    metric_correlation,
    score_texts,
    score_utterance,
)
from .textnorm import NormalizationConfig, normalize_text, tokenize_words

__all__ = [
    "NormalizationConfig",
    "aggregate_corpus",
    "compute_cer",
    "compute_sw_wer",
    "compute_wer",
    "levenshtein_align",
    "levenshtein_distance",
    "metric_correlation",
    "normalize_text",
    "score_texts",
    "score_utterance",
    "substitution_segments",
    "summarize",
    "tokenize_words",
]
