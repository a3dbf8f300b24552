"""Rule-based error taxonomy over substitution segments.

Rules are tried in a fixed order and the first match wins:

1. ``word_boundary``      - identical once spaces and ZWNJ are removed
2. ``he_kasreh_suffix``   - one word differs only by a trailing He (U+0647)
3. ``formality_variant``  - the pair is listed in a user-supplied lexicon
4. ``near_match``         - segment CER <= theta
5. ``full_substitution``  - everything else

``hallucination_flag`` is an utterance-level label derived from insertion
and length ratios.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .align import SubstitutionSegment
from .metrics import EmptyScoreSet, UtteranceScore
from .textnorm import ZWNJ, NormalizationConfig, normalize_text

WORD_BOUNDARY = "word_boundary"
HE_KASREH = "he_kasreh_suffix"
FORMALITY = "formality_variant"
NEAR_MATCH = "near_match"
FULL_SUBSTITUTION = "full_substitution"
HALLUCINATION = "hallucination_flag"

SEGMENT_CATEGORIES = (WORD_BOUNDARY, HE_KASREH, FORMALITY, NEAR_MATCH, FULL_SUBSTITUTION)

HE = "\u0647"
DEFAULT_THETA = 0.3
DEFAULT_INS_TAU = 0.5
DEFAULT_LEN_RHO = 2.0


@dataclass(frozen=True)
class ErrorLabel:
    category: str
    evidence: str


class Lexicon:
    """Unordered set of informal/formal pairs."""

    def __init__(self, pairs: Iterable[tuple[str, str]] = ()):
        self._pairs: set[frozenset] = set()
        self._ordered: list[tuple[str, str]] = []
        for a, b in pairs:
            self.add(a, b)

    def add(self, informal: str, formal: str) -> None:
        key = frozenset((informal, formal))
        if key not in self._pairs:
            self._pairs.add(key)
            self._ordered.append((informal, formal))

    def __contains__(self, pair) -> bool:
        a, b = pair
        return frozenset((a, b)) in self._pairs

    def __len__(self) -> int:
        return len(self._ordered)

    def __iter__(self):
        return iter(self._ordered)


def load_lexicon(path, norm: Optional[NormalizationConfig] = None) -> Lexicon:
    """Read ``informal<TAB>formal`` lines; ``#`` starts a comment."""
    lex = Lexicon()
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'informal<TAB>formal'")
            a, b = (p.strip() for p in parts)
            if norm is not None:
                a, b = normalize_text(a, norm), normalize_text(b, norm)
            lex.add(a, b)
    return lex


def _squash(s: str) -> str:
    return s.replace(" ", "").replace(ZWNJ, "")


def _he_kasreh(ref_str: str, hyp_str: str) -> Optional[str]:
    ref_words, hyp_words = ref_str.split(" "), hyp_str.split(" ")
    if len(ref_words) != len(hyp_words):
        return None
    diffs = [(r, h) for r, h in zip(ref_words, hyp_words) if r != h]
    if len(diffs) != 1:
        return None
    r, h = diffs[0]
    if h == r + HE:
        return f"hypothesis adds trailing He to {r!r}"
    if r == h + HE:
        return f"hypothesis drops trailing He from {r!r}"
    return None


def _in_lexicon(segment: SubstitutionSegment, lexicon: Lexicon) -> bool:
    if (segment.ref_str, segment.hyp_str) in lexicon:
        return True
    pairs = list(zip(segment.ref_str.split(" "), segment.hyp_str.split(" ")))
    return all((r, h) in lexicon for r, h in pairs if r != h) and any(r != h for r, h in pairs)


def classify_segment(
    segment: SubstitutionSegment,
    lexicon: Optional[Lexicon] = None,
    theta: float = DEFAULT_THETA,
) -> ErrorLabel:
    ref_str, hyp_str = segment.ref_str, segment.hyp_str
    if _squash(ref_str) == _squash(hyp_str):
        return ErrorLabel(WORD_BOUNDARY, "same letters once spaces and ZWNJ are removed")
    why = _he_kasreh(ref_str, hyp_str)
    if why:
        return ErrorLabel(HE_KASREH, why)
    if lexicon and _in_lexicon(segment, lexicon):
        return ErrorLabel(FORMALITY, "pair listed in formality lexicon")
    if segment.segment_cer <= theta:
        return ErrorLabel(NEAR_MATCH, f"segment CER {segment.segment_cer:.3f} <= {theta}")
    return ErrorLabel(FULL_SUBSTITUTION, f"segment CER {segment.segment_cer:.3f} > {theta}")


def detect_hallucination(
    score: UtteranceScore,
    ins_tau: float = DEFAULT_INS_TAU,
    len_rho: float = DEFAULT_LEN_RHO,
) -> Optional[ErrorLabel]:
    """Flag an utterance whose insertion ratio or length ratio is too high."""
    ref_len = score.counts.ref_len
    if ref_len == 0:
        return None
    ins_ratio = score.counts.insertions / ref_len
    len_ratio = score.counts.hyp_len / ref_len
    if ins_ratio > ins_tau:
        return ErrorLabel(HALLUCINATION, f"insertion ratio {ins_ratio:.2f} > {ins_tau}")
    if len_ratio > len_rho:
        return ErrorLabel(HALLUCINATION, f"length ratio {len_ratio:.2f} > {len_rho}")
    return None


@dataclass
class ErrorProfile:
    system_name: str
    counts: dict[str, int]
    proportions: dict[str, float]
    flagged_utterance_ids: list[str] = field(default_factory=list)
    segment_labels: list[tuple[str, SubstitutionSegment, ErrorLabel]] = field(default_factory=list, repr=False)

    @property
    def total_segments(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {
            "system": self.system_name,
            "segments": self.total_segments,
            "counts": dict(self.counts),
            "proportions": dict(self.proportions),
            "hallucination_flagged": list(self.flagged_utterance_ids),
        }


def error_profile(
    scores: Iterable[UtteranceScore],
    lexicon: Optional[Lexicon] = None,
    theta: float = DEFAULT_THETA,
    ins_tau: float = DEFAULT_INS_TAU,
    len_rho: float = DEFAULT_LEN_RHO,
) -> ErrorProfile:
    scores = sorted(scores, key=lambda s: s.utterance_id)
    if not scores:
        raise EmptyScoreSet("no scores to profile")
    systems = {s.system_name for s in scores}
    if len(systems) > 1:
        raise ValueError(f"error_profile expects one system, got {sorted(systems)}")
    tally = Counter()
    labelled = []
    flagged = []
    for sc in scores:
        for seg in sc.segments:
            label = classify_segment(seg, lexicon, theta)
            tally[label.category] += 1
            labelled.append((sc.utterance_id, seg, label))
        if detect_hallucination(sc, ins_tau, len_rho):
            flagged.append(sc.utterance_id)
    total = sum(tally.values())
    counts = {c: tally[c] for c in SEGMENT_CATEGORIES}
    props = {c: (tally[c] / total if total else 0.0) for c in SEGMENT_CATEGORIES}
    return ErrorProfile(scores[0].system_name, counts, props, flagged, labelled)
