"""Per-utterance WER / CER / SW-WER and corpus aggregation.

SW-WER replaces the integer substitution count of WER with a CER-weighted
count. For every substitution segment i spanning n_i reference words::

    s_i      = n_i * clamp(CER(ref_segment, hyp_segment), 0, 1)
    S        = sum_i s_i
    N_sub    = sum_i n_i
    SW-WER   = (S + I + D) / (N_sub + C + D)

With 1:1 substitutions N_sub equals the substitution count, so the
denominator is always the reference word count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .align import (
    DEFAULT_TIE_BREAK,
    AlignmentCounts,
    SubstitutionSegment,
    levenshtein_align,
    levenshtein_distance,
    substitution_segments,
    summarize,
)
from .textnorm import DEFAULT_CONFIG, NormalizationConfig, normalize_text, tokenize_words

METRICS = ("cer", "wer", "sw_wer")


class EmptyReference(ValueError):
    """Reference is empty while the hypothesis is not."""


class EmptyScoreSet(ValueError):
    pass


class DegenerateColumn(ValueError):
    """A metric column is constant, so a correlation is undefined."""


@dataclass(frozen=True)
class SwWerResult:
    sw_wer: float
    wer: float
    counts: AlignmentCounts
    segments: tuple[SubstitutionSegment, ...]
    s_weighted: float

    @property
    def n_sub(self) -> int:
        return sum(seg.n_words for seg in self.segments)

    @property
    def seg_count(self) -> int:
        return len(self.segments)


@dataclass(frozen=True)
class UtteranceScore:
    utterance_id: str
    system_name: str
    wer: float
    cer: float
    sw_wer: float
    counts: AlignmentCounts
    s_weighted: float
    n_sub: int
    seg_count: int
    segments: tuple[SubstitutionSegment, ...] = ()
    ref_chars: int = 0
    char_edits: int = 0
    hyp_words: int = 0

    @property
    def ref_words(self) -> int:
        return self.counts.ref_len

    def to_dict(self) -> dict:
        c = self.counts
        return {
            "id": self.utterance_id,
            "system": self.system_name,
            "wer": self.wer,
            "cer": self.cer,
            "sw_wer": self.sw_wer,
            "C": c.hits,
            "S_count": c.substitutions,
            "S_weighted": self.s_weighted,
            "I": c.insertions,
            "D": c.deletions,
            "N_sub": self.n_sub,
            "seg_count": self.seg_count,
            "N": c.ref_len,
            "ref_chars": self.ref_chars,
            "char_edits": self.char_edits,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UtteranceScore":
        counts = AlignmentCounts(d["C"], d["S_count"], d["I"], d["D"])
        return cls(
            utterance_id=d["id"],
            system_name=d["system"],
            wer=d["wer"],
            cer=d["cer"],
            sw_wer=d["sw_wer"],
            counts=counts,
            s_weighted=d["S_weighted"],
            n_sub=d["N_sub"],
            seg_count=d["seg_count"],
            ref_chars=d.get("ref_chars", 0),
            char_edits=d.get("char_edits", 0),
            hyp_words=counts.hyp_len,
        )


def _check_reference(ref, hyp) -> bool:
    """True if both sides are empty (score 0 by convention)."""
    if len(ref) == 0:
        if len(hyp) == 0:
            return True
        raise EmptyReference("reference is empty but hypothesis is not")
    return False


def compute_wer(
    ref_words: Sequence[str],
    hyp_words: Sequence[str],
    tie_break: str = DEFAULT_TIE_BREAK,
) -> tuple[float, AlignmentCounts]:
    if _check_reference(ref_words, hyp_words):
        return 0.0, AlignmentCounts(0, 0, 0, 0)
    counts = summarize(levenshtein_align(ref_words, hyp_words, tie_break))
    return counts.errors / len(ref_words), counts


def compute_cer(ref_text: str, hyp_text: str) -> float:
    """Character error rate, unclamped. Spaces and ZWNJ are characters."""
    if _check_reference(ref_text, hyp_text):
        return 0.0
    return levenshtein_distance(ref_text, hyp_text) / len(ref_text)


def compute_sw_wer(
    ref_words: Sequence[str],
    hyp_words: Sequence[str],
    norm: Optional[NormalizationConfig] = None,
    tie_break: str = DEFAULT_TIE_BREAK,
) -> SwWerResult:
    if _check_reference(ref_words, hyp_words):
        return SwWerResult(0.0, 0.0, AlignmentCounts(0, 0, 0, 0), (), 0.0)
    path = levenshtein_align(ref_words, hyp_words, tie_break)
    counts = summarize(path)
    segments = tuple(substitution_segments(path, ref_words, hyp_words, norm))
    return _sw_wer_from_parts(counts, segments)


def _sw_wer_from_parts(counts: AlignmentCounts, segments) -> SwWerResult:
    s_weighted = math.fsum(seg.weighted_errors for seg in segments)
    n_sub = sum(seg.n_words for seg in segments)
    denom = n_sub + counts.hits + counts.deletions
    sw_wer = (s_weighted + counts.insertions + counts.deletions) / denom
    wer = counts.errors / counts.ref_len
    return SwWerResult(sw_wer, wer, counts, segments, s_weighted)


def score_texts(
    utterance_id: str,
    reference: str,
    hypothesis: str,
    norm: NormalizationConfig = DEFAULT_CONFIG,
    system_name: str = "",
    tie_break: str = DEFAULT_TIE_BREAK,
) -> UtteranceScore:
    """Normalize once and compute all three metrics for one pair."""
    ref_text = normalize_text(reference, norm)
    hyp_text = normalize_text(hypothesis, norm)
    ref_words = tokenize_words(ref_text)
    hyp_words = tokenize_words(hyp_text)
    try:
        _check_reference(ref_words, hyp_words)
        _check_reference(ref_text, hyp_text)
    except EmptyReference as exc:
        raise EmptyReference(f"utterance {utterance_id!r}: {exc}") from None

    if not ref_words and not hyp_words:
        return UtteranceScore(
            utterance_id, system_name, 0.0, 0.0, 0.0, AlignmentCounts(0, 0, 0, 0),
            0.0, 0, 0, (), len(ref_text), levenshtein_distance(ref_text, hyp_text), 0,
        )

    path = levenshtein_align(ref_words, hyp_words, tie_break)
    counts = summarize(path)
    segments = tuple(substitution_segments(path, ref_words, hyp_words))
    sw = _sw_wer_from_parts(counts, segments)
    char_edits = levenshtein_distance(ref_text, hyp_text)
    return UtteranceScore(
        utterance_id=utterance_id,
        system_name=system_name,
        wer=sw.wer,
        cer=char_edits / len(ref_text),
        sw_wer=sw.sw_wer,
        counts=counts,
        s_weighted=sw.s_weighted,
        n_sub=sw.n_sub,
        seg_count=sw.seg_count,
        segments=segments,
        ref_chars=len(ref_text),
        char_edits=char_edits,
        hyp_words=len(hyp_words),
    )


def score_utterance(record, hypothesis: str, norm: NormalizationConfig = DEFAULT_CONFIG,
                    system_name: str = "", tie_break: str = DEFAULT_TIE_BREAK) -> UtteranceScore:
    """Score ``hypothesis`` against a record exposing ``id`` and ``text``."""
    return score_texts(record.id, record.text, hypothesis, norm, system_name, tie_break)


@dataclass(frozen=True)
class CorpusSummary:
    """Corpus-level scores. Macro values are percentages of mean fractions;
    micro values pool counts across utterances before dividing."""

    system_name: str
    utterance_count: int
    macro_cer: float
    macro_wer: float
    macro_sw_wer: float
    micro_cer: float
    micro_wer: float
    micro_sw_wer: float
    mode: str = "macro"

    def value(self, metric: str) -> float:
        return getattr(self, f"{self.mode}_{metric}")

    @property
    def cer(self) -> float:
        return self.value("cer")

    @property
    def wer(self) -> float:
        return self.value("wer")

    @property
    def sw_wer(self) -> float:
        return self.value("sw_wer")

    def to_dict(self) -> dict:
        return {
            "system": self.system_name,
            "utterances": self.utterance_count,
            "mode": self.mode,
            "macro": {"cer": self.macro_cer, "wer": self.macro_wer, "sw_wer": self.macro_sw_wer},
            "micro": {"cer": self.micro_cer, "wer": self.micro_wer, "sw_wer": self.micro_sw_wer},
        }


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def aggregate_corpus(scores: Iterable[UtteranceScore], mode: str = "macro") -> CorpusSummary:
    if mode not in ("macro", "micro"):
        raise ValueError(f"mode must be 'macro' or 'micro', got {mode!r}")
    scores = sorted(scores, key=lambda s: s.utterance_id)
    if not scores:
        raise EmptyScoreSet("no scores to aggregate")
    systems = {s.system_name for s in scores}
    if len(systems) > 1:
        raise ValueError(f"aggregate_corpus expects one system, got {sorted(systems)}")
    n = len(scores)

    def mean_pct(attr):
        return 100.0 * math.fsum(getattr(s, attr) for s in scores) / n

    ref_words = sum(s.ref_words for s in scores)
    ref_chars = sum(s.ref_chars for s in scores)
    errors = sum(s.counts.errors for s in scores)
    weighted = math.fsum(s.s_weighted + s.counts.insertions + s.counts.deletions for s in scores)
    return CorpusSummary(
        system_name=scores[0].system_name,
        utterance_count=n,
        macro_cer=mean_pct("cer"),
        macro_wer=mean_pct("wer"),
        macro_sw_wer=mean_pct("sw_wer"),
        micro_cer=100.0 * _ratio(sum(s.char_edits for s in scores), ref_chars),
        micro_wer=100.0 * _ratio(errors, ref_words),
        micro_sw_wer=100.0 * _ratio(weighted, ref_words),
        mode=mode,
    )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    if n != len(ys):
        raise ValueError("columns differ in length")
    if n < 2:
        raise DegenerateColumn("need at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise DegenerateColumn("constant column")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


CORRELATION_PAIRS = (("wer", "sw_wer"), ("cer", "sw_wer"), ("wer", "cer"))


@dataclass
class CorrelationReport:
    pearson: dict[str, float]
    rows: list[dict] = field(default_factory=list)


def metric_correlation(scores: Iterable[UtteranceScore]) -> CorrelationReport:
    """Pairwise Pearson r between the three metrics, plus scatter rows."""
    scores = sorted(scores, key=lambda s: (s.system_name, s.utterance_id))
    columns = {m: [getattr(s, m) for s in scores] for m in METRICS}
    coeffs = {}
    for a, b in CORRELATION_PAIRS:
        try:
            coeffs[f"{a}~{b}"] = pearson(columns[a], columns[b])
        except DegenerateColumn as exc:
            raise DegenerateColumn(f"{a}/{b}: {exc}") from None
    rows = [
        {"id": s.utterance_id, "system": s.system_name, "wer": s.wer, "cer": s.cer, "sw_wer": s.sw_wer}
        for s in scores
    ]
    return CorrelationReport(coeffs, rows)
