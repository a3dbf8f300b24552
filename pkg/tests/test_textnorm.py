import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asreval.textnorm import (
    DEFAULT_CONFIG,
    PROFILES,
    ZWNJ,
    ConfigError,
    NormalizationConfig,
    char_sequence,
    load_config,
    normalize_text,
    tokenize_words,
)

ARABIC_YEH, PERSIAN_YEH = "ي", "ی"
ARABIC_KAF, PERSIAN_KAF = "ك", "ک"
FATHA, KASRA = "َ", "ِ"

CONFIGS = [
    DEFAULT_CONFIG,
    PROFILES["digits"],
    PROFILES["minimal"],
    NormalizationConfig(zwnj_policy="drop"),
    NormalizationConfig(zwnj_policy="to_space"),
    NormalizationConfig(collapse_whitespace=False),
    NormalizationConfig(zwnj_policy="to_space", collapse_whitespace=False, punctuation_policy="keep"),
    # map targets that the later steps would remove again
    NormalizationConfig(char_map=(("x", ZWNJ), ("y", FATHA), ("z", "!")), zwnj_policy="drop"),
]

arabic_text = st.text(
    alphabet=st.sampled_from(
        list("abc ,.!؟،؛\t\n") + [ZWNJ, ARABIC_YEH, PERSIAN_YEH, ARABIC_KAF, FATHA, KASRA,
                                "ه", "ب", "۱", "١", " ", "ئ"]
    ),
    max_size=30,
)


def test_collapse_whitespace():
    assert normalize_text("a   b ") == "a b"


def test_zwnj_drop():
    cfg = NormalizationConfig(zwnj_policy="drop")
    assert normalize_text("می‌خوام", cfg) == "میخوام"


def test_zwnj_kept_by_default():
    assert normalize_text("می‌خوام") == "می‌خوام"


def test_zwnj_to_space():
    cfg = NormalizationConfig(zwnj_policy="to_space")
    assert normalize_text("درخت‌ها", cfg) == "درخت ها"


def test_arabic_yeh_mapped_to_persian():
    out = normalize_text("ب" + ARABIC_YEH + "ن")
    assert [f"U+{ord(c):04X}" for c in out] == ["U+0628", "U+06CC", "U+0646"]


def test_arabic_kaf_mapped_and_hamza_yeh_kept():
    out = normalize_text(ARABIC_KAF + "ئ")
    assert out == PERSIAN_KAF + "ئ"


def test_diacritics_stripped_by_default():
    assert normalize_text("کتاب" + KASRA) == "کتاب"
    keep = NormalizationConfig(diacritics_policy="keep")
    assert normalize_text("کتاب" + KASRA, keep) == "کتاب" + KASRA


def test_punctuation_stripped_including_arabic_marks():
    assert normalize_text("سلام، خوبی؟ بله؛ hi!") == "سلام خوبی بله hi"


def test_digits_untouched_by_default():
    assert normalize_text("۱۲ 12") == "۱۲ 12"
    assert normalize_text("۱۲ ١", PROFILES["digits"]) == "12 1"


def test_empty_input():
    assert normalize_text("") == ""
    assert tokenize_words("") == []


def test_tokenize():
    assert tokenize_words("a b c") == ["a", "b", "c"]
    assert tokenize_words("بچه‌ها در") == ["بچه‌ها", "در"]


def test_golden_row1_reference_has_six_tokens(golden_pairs):
    assert len(tokenize_words(normalize_text(golden_pairs[0]["ref"]))) == 6


def test_char_sequence_counts():
    assert char_sequence("ab") == ["a", "b"]
    assert len(char_sequence("می‌کردند")) == 8
    assert len(char_sequence("به نام")) == 6


@pytest.mark.parametrize("bad", [
    {"char_map": (("a", "b"), ("b", "c"))},
    {"char_map": (("a", "b"), ("a", "c"))},
    {"char_map": (("ab", "c"),)},
    {"zwnj_policy": "delete"},
    {"diacritics_policy": "maybe"},
])
def test_invalid_configs_rejected(bad):
    with pytest.raises(ConfigError):
        NormalizationConfig(**bad)


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "mine.json"
    path.write_text(json.dumps(PROFILES["digits"].to_dict()), encoding="utf-8")
    loaded = load_config(path)
    assert loaded == PROFILES["digits"]


def test_config_file_literal_chars_and_unknown_keys(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"char_map": [["ى", "U+06CC"]], "zwnj_policy": "drop"}), encoding="utf-8")
    cfg = load_config(path)
    assert cfg.name == "c"
    assert normalize_text("ى" + ZWNJ, cfg) == PERSIAN_YEH
    path.write_text(json.dumps({"colour": "blue"}), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_builtin_profile_lookup():
    assert load_config("default") is DEFAULT_CONFIG


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: f"{c.name}-{c.zwnj_policy}-{c.collapse_whitespace}")
@given(text=arabic_text)
@settings(max_examples=300)
def test_idempotent(cfg, text):
    once = normalize_text(text, cfg)
    assert normalize_text(once, cfg) == once


@given(text=arabic_text)
def test_tokenizer_roundtrip_and_no_spaces(text):
    toks = tokenize_words(normalize_text(text))
    assert tokenize_words(" ".join(toks)) == toks
    assert all(tok and " " not in tok for tok in toks)


@given(text=st.text(max_size=40))
def test_char_sequence_is_scalar_values(text):
    assert len(char_sequence(text)) == len(text.encode("utf-32-le")) // 4
