import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asreval.align import (
    DELETE,
    INSERT,
    MATCH,
    SUBSTITUTE,
    AlignmentPath,
    EditOp,
    levenshtein_align,
    levenshtein_distance,
    substitution_segments,
    summarize,
)
from asreval.textnorm import normalize_text, tokenize_words
from oracles import brute_force_distance, canonical_ops, memo_distance

KIND_LETTER = {MATCH: "M", SUBSTITUTE: "S", INSERT: "I", DELETE: "D"}

small_seq = st.lists(st.sampled_from("abcd"), max_size=6)


def letters(path):
    return "".join(KIND_LETTER[k] for k in path.kinds())


def test_identity():
    path = levenshtein_align(list("abc"), list("abc"))
    assert letters(path) == "MMM"
    assert path.distance == 0


def test_single_deletion():
    path = levenshtein_align(["a", "b"], ["a"])
    assert path.kinds() == [MATCH, DELETE]
    assert path.ops[1] == EditOp(DELETE, 1, None)
    assert path.distance == 1


def test_kitten_sitting():
    # oracle: full recursion over the cost matrix
    assert brute_force_distance("kitten", "sitting") == 3
    path = levenshtein_align(list("kitten"), list("sitting"))
    assert path.distance == 3
    assert levenshtein_distance("kitten", "sitting") == 3


def test_both_empty():
    path = levenshtein_align([], [])
    assert path.ops == ()
    assert summarize(path) == summarize(AlignmentPath((), 0, 0))


def test_all_insertions():
    counts = summarize(levenshtein_align([], ["x", "y"]))
    assert (counts.hits, counts.substitutions, counts.insertions, counts.deletions) == (0, 0, 2, 0)


def test_identity_counts():
    counts = summarize(levenshtein_align(list("abcd"), list("abcd")))
    assert (counts.hits, counts.substitutions, counts.insertions, counts.deletions) == (4, 0, 0, 0)


def test_golden_row4_word_alignment(golden_pairs):
    ref = tokenize_words(normalize_text(golden_pairs[3]["ref"]))
    hyp = tokenize_words(normalize_text(golden_pairs[3]["hyp"]))
    counts = summarize(levenshtein_align(ref, hyp))
    assert (counts.substitutions, counts.insertions, counts.deletions, counts.hits) == (2, 1, 0, 5)
    assert counts.ref_len == 7


def test_tie_break_prefers_delete_over_substitute():
    # ref [x, y] vs hyp [xy]: substitute+delete either way; from the end the
    # delete is taken first, so the substitution pairs x with xy.
    path = levenshtein_align(["x", "y"], ["xy"])
    assert letters(path) == "SD"


def test_tie_break_prefers_substitute_over_insert():
    path = levenshtein_align(["xy"], ["x", "y"])
    assert letters(path) == "IS"


def test_segments_run_definition():
    ref, hyp = ["a", "b", "c", "d"], ["a", "x", "y", "d"]
    path = levenshtein_align(ref, hyp)
    assert letters(path) == "MSSM"
    segs = substitution_segments(path, ref, hyp)
    assert len(segs) == 1
    assert segs[0].n_words == 2
    assert segs[0].ref_range == (1, 3) and segs[0].hyp_range == (1, 3)
    assert segs[0].ref_str == "b c" and segs[0].hyp_str == "x y"


def test_segment_cer_half():
    ref, hyp = ["ab", "cd"], ["ab", "cx"]
    segs = substitution_segments(levenshtein_align(ref, hyp), ref, hyp)
    assert len(segs) == 1
    seg = segs[0]
    assert (seg.ref_str, seg.hyp_str) == ("cd", "cx")
    assert memo_distance("cd", "cx") == 1
    assert seg.segment_cer == 0.5


def test_segment_cer_disjoint_is_one():
    segs = substitution_segments(levenshtein_align(["abc"], ["xyz"]), ["abc"], ["xyz"])
    assert segs[0].segment_cer == 1.0


def test_segment_cer_clamped():
    segs = substitution_segments(levenshtein_align(["a"], ["wxyz"]), ["a"], ["wxyz"])
    assert segs[0].char_distance == 4
    assert segs[0].segment_cer == 1.0


def test_no_substitutions_no_segments():
    ref, hyp = ["a", "b"], ["a", "b", "c"]
    assert substitution_segments(levenshtein_align(ref, hyp), ref, hyp) == []


def test_segments_split_by_non_substitutions():
    ref, hyp = list("abcde"), list("xbyzq")
    path = levenshtein_align(ref, hyp)
    assert letters(path) == "SMSSS"
    assert [s.n_words for s in substitution_segments(path, ref, hyp)] == [1, 3]


def test_jsonl_debug_dump():
    path = levenshtein_align(["a", "b"], ["a"])
    lines = [json.loads(line) for line in path.to_jsonl().splitlines()]
    assert lines == [
        {"kind": "match", "ref_index": 0, "hyp_index": 0},
        {"kind": "delete", "ref_index": 1, "hyp_index": None},
    ]


def _check_path_invariants(path, ref, hyp):
    ref_idx = [op.ref_index for op in path.ops if op.kind in (MATCH, SUBSTITUTE, DELETE)]
    hyp_idx = [op.hyp_index for op in path.ops if op.kind in (MATCH, SUBSTITUTE, INSERT)]
    assert ref_idx == list(range(len(ref)))
    assert hyp_idx == list(range(len(hyp)))
    for op in path.ops:
        if op.kind in (MATCH, SUBSTITUTE):
            assert op.ref_index is not None and op.hyp_index is not None
            assert (ref[op.ref_index] == hyp[op.hyp_index]) == (op.kind == MATCH)
        elif op.kind == DELETE:
            assert op.hyp_index is None
        else:
            assert op.ref_index is None


def test_exhaustive_small_against_brute_force():
    alphabet = "abcd"
    for n in range(4):
        for m in range(4):
            for ref in itertools.product(alphabet, repeat=n):
                for hyp in itertools.product(alphabet[:3], repeat=m):
                    path = levenshtein_align(ref, hyp)
                    counts = summarize(path)
                    assert counts.errors == brute_force_distance(ref, hyp)
                    assert letters(path) == "".join(canonical_ops(ref, hyp))


@given(ref=small_seq, hyp=small_seq)
def test_path_matches_oracles(ref, hyp):
    path = levenshtein_align(ref, hyp)
    counts = summarize(path)
    assert counts.errors == memo_distance(ref, hyp)
    assert counts.ref_len == len(ref) and counts.hyp_len == len(hyp)
    assert letters(path) == "".join(canonical_ops(ref, hyp))
    _check_path_invariants(path, ref, hyp)


@given(ref=small_seq, hyp=small_seq)
def test_n_sub_equals_substitution_count(ref, hyp):
    path = levenshtein_align(ref, hyp)
    segs = substitution_segments(path, ref, hyp)
    assert sum(s.n_words for s in segs) == summarize(path).substitutions
    for s in segs:
        assert s.n_words >= 1
        assert s.hyp_range[1] - s.hyp_range[0] == s.n_words
        assert 0.0 <= s.segment_cer <= 1.0
        assert (s.segment_cer == 0.0) == (s.ref_str == s.hyp_str)


@given(a=st.text(alphabet="abcdé‌ ", max_size=70), b=st.text(alphabet="abcdé‌ ", max_size=70))
def test_bit_parallel_distance_matches_dp(a, b):
    assert levenshtein_distance(a, b) == memo_distance(a, b)
    assert levenshtein_distance(list(a), list(b)) == levenshtein_distance(a, b)


@given(ref=small_seq, hyp=small_seq)
def test_deterministic_serialization(ref, hyp):
    assert levenshtein_align(ref, hyp).to_jsonl() == levenshtein_align(list(ref), list(hyp)).to_jsonl()


@pytest.mark.parametrize("n", [1, 63, 64, 65, 200])
def test_bit_parallel_long_patterns(n):
    a = "ab" * n
    b = "ba" * n + "c"
    assert levenshtein_distance(a, b) == memo_distance(a, b)


def test_diagonal_first_tie_break():
    # ref [x, y] vs hyp [xy]: the alternative rule substitutes y/xy first
    path = levenshtein_align(["x", "y"], ["xy"], tie_break="diagonal-first")
    assert letters(path) == "DS"
    with pytest.raises(ValueError):
        levenshtein_align(["a"], ["b"], tie_break="random")


@given(ref=small_seq, hyp=small_seq)
def test_tie_breaks_agree_on_distance(ref, hyp):
    a = summarize(levenshtein_align(ref, hyp))
    b = summarize(levenshtein_align(ref, hyp, tie_break="diagonal-first"))
    assert a.errors == b.errors
    assert b.substitutions >= a.substitutions
