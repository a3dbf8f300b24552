"""Unit-cost Levenshtein alignment with a deterministic backtrace.

The same engine aligns word sequences (for WER / SW-WER) and character
sequences (for CER). ``levenshtein_distance`` is a distance-only fast path
used wherever the edit path itself is not needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

from .textnorm import NormalizationConfig, normalize_text

MATCH = "match"
SUBSTITUTE = "substitute"
INSERT = "insert"
DELETE = "delete"
OP_KINDS = (MATCH, SUBSTITUTE, INSERT, DELETE)

# Backtrace preferences among cost-optimal moves, walking from the end.
# "match-first": match > delete > substitute > insert (default).
# "diagonal-first": match or substitute > delete > insert.
TIE_BREAKS = ("match-first", "diagonal-first")
DEFAULT_TIE_BREAK = "match-first"


@dataclass(frozen=True)
class EditOp:
    kind: str
    ref_index: Optional[int] = None
    hyp_index: Optional[int] = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ref_index": self.ref_index, "hyp_index": self.hyp_index}


@dataclass(frozen=True)
class AlignmentPath:
    ops: tuple[EditOp, ...]
    ref_len: int
    hyp_len: int

    @property
    def distance(self) -> int:
        return sum(1 for op in self.ops if op.kind != MATCH)

    def kinds(self) -> list[str]:
        return [op.kind for op in self.ops]

    def to_jsonl(self) -> str:
        """Debug dump, one op per line in path order."""
        return "".join(
            json.dumps(op.to_dict(), ensure_ascii=False, separators=(",", ":")) + "\n"
            for op in self.ops
        )


@dataclass(frozen=True)
class AlignmentCounts:
    hits: int
    substitutions: int
    insertions: int
    deletions: int

    @property
    def ref_len(self) -> int:
        return self.hits + self.substitutions + self.deletions

    @property
    def hyp_len(self) -> int:
        return self.hits + self.substitutions + self.insertions

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions


@dataclass(frozen=True)
class SubstitutionSegment:
    """A maximal run of consecutive 1:1 substitutions in a word alignment.

    ``ref_range`` and ``hyp_range`` are half-open ``(start, stop)`` word
    spans. ``segment_cer`` is the character error rate between the joined
    segment strings, clamped to ``[0, 1]``.
    """

    ref_range: tuple[int, int]
    hyp_range: tuple[int, int]
    ref_str: str
    hyp_str: str
    char_distance: int
    segment_cer: float

    @property
    def n_words(self) -> int:
        return self.ref_range[1] - self.ref_range[0]

    @property
    def weighted_errors(self) -> float:
        return self.n_words * self.segment_cer

    def to_dict(self) -> dict:
        return {
            "ref_range": list(self.ref_range),
            "hyp_range": list(self.hyp_range),
            "n_words": self.n_words,
            "ref_str": self.ref_str,
            "hyp_str": self.hyp_str,
            "char_distance": self.char_distance,
            "segment_cer": self.segment_cer,
        }


def _cost_matrix(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> list[list[int]]:
    n, m = len(ref), len(hyp)
    rows = [list(range(m + 1))]
    for i in range(1, n + 1):
        r = ref[i - 1]
        prev = rows[-1]
        cur = [i] * (m + 1)
        left = i
        for j in range(1, m + 1):
            diag = prev[j - 1] if r == hyp[j - 1] else prev[j - 1] + 1
            up = prev[j] + 1
            left += 1
            best = diag if diag < up else up
            if left < best:
                best = left
            cur[j] = best
            left = best
        rows.append(cur)
    return rows


def levenshtein_align(
    ref: Sequence[Hashable],
    hyp: Sequence[Hashable],
    tie_break: str = DEFAULT_TIE_BREAK,
) -> AlignmentPath:
    """Align ``hyp`` against ``ref`` under unit costs.

    Among cost-optimal paths the backtrace (from the end) follows
    ``tie_break``. The default prefers match, delete, substitute, insert in
    that order; ``"diagonal-first"`` takes a substitution before a delete.
    Both are deterministic. The choice fixes the S/I/D split, which SW-WER
    depends on.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {tie_break!r}")
    sub_before_delete = tie_break == "diagonal-first"
    n, m = len(ref), len(hyp)
    cost = _cost_matrix(ref, hyp)
    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = cost[i][j]
        can_sub = i > 0 and j > 0 and here == cost[i - 1][j - 1] + 1
        can_del = i > 0 and here == cost[i - 1][j] + 1
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and here == cost[i - 1][j - 1]:
            i -= 1
            j -= 1
            ops.append(EditOp(MATCH, i, j))
        elif can_del and not (sub_before_delete and can_sub):
            i -= 1
            ops.append(EditOp(DELETE, i, None))
        elif can_sub:
            i -= 1
            j -= 1
            ops.append(EditOp(SUBSTITUTE, i, j))
        else:
            j -= 1
            ops.append(EditOp(INSERT, None, j))
    ops.reverse()
    return AlignmentPath(tuple(ops), n, m)


def levenshtein_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Edit distance only, via the bit-parallel (Myers/Hyyro) recurrence."""
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return len(a)
    peq: dict = {}
    for k, c in enumerate(b):
        peq[c] = peq.get(c, 0) | (1 << k)
    mask = (1 << m) - 1
    top = 1 << (m - 1)
    pv, mv, score = mask, 0, m
    for c in a:
        eq = peq.get(c, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = (mv | ~(xh | pv)) & mask
        mh = pv & xh
        if ph & top:
            score += 1
        elif mh & top:
            score -= 1
        ph = ((ph << 1) | 1) & mask
        mh = (mh << 1) & mask
        pv = (mh | ~(xv | ph)) & mask
        mv = ph & xv
    return score


def summarize(path: AlignmentPath) -> AlignmentCounts:
    tally = dict.fromkeys(OP_KINDS, 0)
    for op in path.ops:
        tally[op.kind] += 1
    return AlignmentCounts(tally[MATCH], tally[SUBSTITUTE], tally[INSERT], tally[DELETE])


def segment_cer(ref_str: str, hyp_str: str) -> tuple[int, float]:
    """Character distance and clamped CER between two segment strings."""
    dist = levenshtein_distance(ref_str, hyp_str)
    if not ref_str:
        return dist, 1.0 if dist else 0.0
    return dist, min(1.0, dist / len(ref_str))


def substitution_segments(
    path: AlignmentPath,
    ref_tokens: Sequence[str],
    hyp_tokens: Sequence[str],
    norm: Optional[NormalizationConfig] = None,
) -> list[SubstitutionSegment]:
    """Group consecutive substitute ops into segments.

    Any non-substitute op ends the current run. When ``norm`` is given the
    joined segment strings are normalized before the character comparison
    (a no-op for tokens that are already normalized).
    """
    segments: list[SubstitutionSegment] = []
    run: list[EditOp] = []

    def flush():
        if not run:
            return
        r0, r1 = run[0].ref_index, run[-1].ref_index + 1
        h0, h1 = run[0].hyp_index, run[-1].hyp_index + 1
        ref_str = " ".join(ref_tokens[r0:r1])
        hyp_str = " ".join(hyp_tokens[h0:h1])
        if norm is not None:
            ref_str = normalize_text(ref_str, norm)
            hyp_str = normalize_text(hyp_str, norm)
        dist, cer = segment_cer(ref_str, hyp_str)
        segments.append(SubstitutionSegment((r0, r1), (h0, h1), ref_str, hyp_str, dist, cer))
        run.clear()

    for op in path.ops:
        if op.kind == SUBSTITUTE:
            run.append(op)
        else:
            flush()
    flush()
    return segments
