import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asreval.breakdown import (
    UNKNOWN,
    Cell,
    DimensionalityError,
    EmptyInput,
    UnknownDimension,
    UnresolvedId,
    box_statistics,
    compare_systems,
    cross_tabulate,
    group_scores,
)
from asreval.corpus import UtteranceRecord
from asreval.metrics import aggregate_corpus, score_texts
from synth import planted_corpus

METRICS = ("cer", "wer", "sw_wer")


def test_single_category_equals_corpus_summary():
    records, scores, _ = planted_corpus(40, seed=1)
    records = [UtteranceRecord(r.id, r.text, formality="formal") for r in records]
    table = group_scores(scores, records, ["formality"])
    (row,) = table.rows
    summary = aggregate_corpus(scores)
    for m in METRICS:
        assert row.cell.metric(m) == pytest.approx(getattr(summary, f"macro_{m}"), abs=1e-12)
    assert row.cell.count == 40


def test_four_way_split_matches_planted_values():
    records, scores, expected = planted_corpus(200, seed=2)
    table = group_scores(scores, records, ["formality", "acoustic_environment"])
    assert len(table.rows) == 4
    for row in table.rows:
        key = tuple(v for _, v in row.key)
        cer, wer, sw, n = expected[key]
        assert row.cell.count == n
        assert abs(row.cell.cer - float(cer)) <= 1e-12
        assert abs(row.cell.wer - float(wer)) <= 1e-12
        assert abs(row.cell.sw_wer - float(sw)) <= 1e-12


def test_speaker_class_two_groups():
    recs = [UtteranceRecord("a", "x", num_speakers=1), UtteranceRecord("b", "x", num_speakers=3),
            UtteranceRecord("c", "x", num_speakers=2)]
    scores = [score_texts(r.id, "x", "x") for r in recs]
    table = group_scores(scores, recs, ["speaker_class"])
    assert [r.key for r in table.rows] == [(("speaker_class", "multiple"),), (("speaker_class", "single"),)]
    assert [r.cell.count for r in table.rows] == [2, 1]


def test_missing_metadata_goes_to_unknown():
    recs = [UtteranceRecord("a", "x", gender="male"), UtteranceRecord("b", "x")]
    scores = [score_texts(r.id, "x", "y") for r in recs]
    keys = [r.key for r in group_scores(scores, recs, ["gender"]).rows]
    assert (("gender", UNKNOWN),) in keys


def test_unknown_dimension_and_unresolved_id():
    recs = [UtteranceRecord("a", "x")]
    with pytest.raises(UnknownDimension):
        group_scores([score_texts("a", "x", "x")], recs, ["colour"])
    with pytest.raises(UnresolvedId):
        group_scores([score_texts("zz", "x", "x")], recs, ["gender"])


def _cells_table(cells):
    """cells: {(col, row): (wer, count)} for a single system."""
    recs, scores = [], []
    i = 0
    for (col, row), (wer_pct, count) in sorted(cells.items()):
        k = wer_pct // 10
        for _ in range(count):
            uid = f"u{i:04d}"
            recs.append(UtteranceRecord(uid, "x", formality=col, acoustic_environment=row))
            ref = " ".join(["w"] * 10)
            hyp = " ".join(["w"] * (10 - k))
            scores.append(score_texts(uid, ref, hyp))
            i += 1
    return group_scores(scores, recs, ["formality", "acoustic_environment"])


def test_margins_weighted_by_count():
    table = _cells_table({
        ("formal", "clean"): (20, 10),
        ("formal", "noisy"): (40, 30),
        ("informal", "clean"): (10, 5),
        ("informal", "noisy"): (30, 15),
    })
    (tab,) = cross_tabulate(table).values()
    # formal column: (10 * 20 + 30 * 40) / 40 = 35
    assert tab.col_margins["formal"].wer == pytest.approx(35.0, abs=1e-9)
    assert tab.col_margins["formal"].count == 40
    # clean row: (10 * 20 + 5 * 10) / 15
    assert tab.row_margins["clean"].wer == pytest.approx(250 / 15, abs=1e-9)
    total = (10 * 20 + 30 * 40 + 5 * 10 + 15 * 30) / 60
    assert tab.total.wer == pytest.approx(total, abs=1e-9)
    assert tab.cells[("noisy", "informal")].count == 15


def test_crosstab_needs_two_dimensions():
    records, scores, _ = planted_corpus(20)
    with pytest.raises(DimensionalityError):
        cross_tabulate(group_scores(scores, records, ["formality"]))


def test_compare_systems_best():
    cmp = compare_systems([("Vosk", Cell(23.96, 44.62, 39.41, 1)), ("Avanegar", Cell(8.75, 19.30, 15.68, 1))])
    for m in METRICS:
        assert cmp.best[m] == ["Avanegar"]
        assert not cmp.is_best("Vosk", m)


def test_compare_systems_ties_and_single():
    cmp = compare_systems([("a", Cell(1.0, 2.0, 3.0, 1)), ("b", Cell(1.0, 2.5, 3.0, 1))])
    assert cmp.best["cer"] == ["a", "b"] and cmp.best["wer"] == ["a"]
    solo = compare_systems([("only", Cell(5.0, 6.0, 7.0, 1))])
    assert all(solo.best[m] == ["only"] for m in METRICS)
    with pytest.raises(EmptyInput):
        compare_systems([])


def test_compare_from_summaries():
    a = aggregate_corpus([score_texts("u", "a b", "a c", system_name="A")])
    b = aggregate_corpus([score_texts("u", "a b", "a b", system_name="B")])
    assert compare_systems([a, b]).best["wer"] == ["B"]


def test_best_marked_per_group():
    _, s1, _ = planted_corpus(60, seed=4, system="one")
    recs, _, _ = planted_corpus(60, seed=4)
    s2 = [score_texts(s.utterance_id, "ab ab", "ab ab", system_name="two") for s in s1]
    table = group_scores(s1 + s2, recs, ["formality"])
    for key in table.keys():
        assert table.is_best("two", key, "wer")
        assert not table.is_best("one", key, "wer")


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(8, 80))
def test_recombination_and_permutation(seed, n):
    records, scores, _ = planted_corpus(n, seed=seed)
    table = group_scores(scores, records, ["formality", "acoustic_environment"])
    recombined = Cell.weighted([r.cell for r in table.rows])
    summary = aggregate_corpus(scores)
    for m in METRICS:
        assert recombined.metric(m) == pytest.approx(getattr(summary, f"macro_{m}"), abs=1e-9)
    shuffled = scores[:]
    random.Random(seed).shuffle(shuffled)
    again = group_scores(shuffled, list(reversed(records)), ["formality", "acoustic_environment"])
    assert again.rows == table.rows


def test_box_statistics():
    recs = [UtteranceRecord(f"u{i}", "x", gender="male") for i in range(9)]
    ks = [0, 1, 1, 1, 2, 2, 2, 3, 10]
    scores = [score_texts(f"u{i}", " ".join("abcdefghij"), " ".join("abcdefghij"[k:])) for i, k in enumerate(ks)]
    (box,) = box_statistics(scores, recs, ["gender"], metric="wer")
    assert box.count == 9
    assert (box.minimum, box.median, box.maximum) == (0.0, 20.0, 100.0)
    assert box.q1 == pytest.approx(10.0) and box.q3 == pytest.approx(20.0)
    assert box.outliers == (100.0,)
    assert box.upper_whisker == 30.0


def test_fraction_sanity_of_planted_corpus():
    _, scores, expected = planted_corpus(10, seed=9)
    assert sum(v[3] for v in expected.values()) == 10
    assert all(isinstance(v[0], Fraction) for v in expected.values())
