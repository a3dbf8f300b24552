"""Text canonicalization for Arabic-script (and general Unicode) transcripts.

Reference and hypothesis go through the same :class:`NormalizationConfig`
before any metric is computed, so the policy is explicit and recorded with
every score file.
"""

from __future__ import annotations

import json
import unicodedata
from functools import lru_cache
from dataclasses import asdict, dataclass, field
from pathlib import Path

ZWNJ = "\u200c"

ZWNJ_POLICIES = ("keep", "drop", "to_space")
DIACRITICS_POLICIES = ("keep", "strip")
PUNCTUATION_POLICIES = ("keep", "strip")

# Arabic harakat: fathatan .. sukun
DIACRITICS = frozenset(chr(cp) for cp in range(0x064B, 0x0653))
ARABIC_PUNCTUATION = frozenset("\u060c\u061b\u061f")  # comma, semicolon, question mark

DEFAULT_CHAR_MAP: tuple[tuple[str, str], ...] = (
    ("\u064a", "\u06cc"),  # Arabic Yeh -> Persian Yeh
    ("\u0643", "\u06a9"),  # Arabic Kaf -> Persian Kaf
)

# Arabic-Indic and Extended Arabic-Indic digits -> ASCII
DIGIT_CHAR_MAP: tuple[tuple[str, str], ...] = tuple(
    (chr(base + d), str(d)) for base in (0x0660, 0x06F0) for d in range(10)
)


class ConfigError(ValueError):
    """Raised for an invalid normalization config."""


@dataclass(frozen=True)
class NormalizationConfig:
    name: str = "default"
    char_map: tuple[tuple[str, str], ...] = DEFAULT_CHAR_MAP
    zwnj_policy: str = "keep"
    diacritics_policy: str = "strip"
    punctuation_policy: str = "strip"
    collapse_whitespace: bool = True
    _table: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        char_map = tuple((str(s), str(t)) for s, t in self.char_map)
        object.__setattr__(self, "char_map", char_map)
        for src, tgt in char_map:
            if len(src) != 1 or len(tgt) != 1:
                raise ConfigError(f"char_map entries must be single codepoints: {src!r} -> {tgt!r}")
        sources = [s for s, _ in char_map]
        if len(set(sources)) != len(sources):
            raise ConfigError("char_map has duplicate sources")
        clash = set(sources) & {t for _, t in char_map}
        if clash:
            raise ConfigError(
                "char_map is not idempotent; targets also used as sources: "
                + ", ".join(f"U+{ord(c):04X}" for c in sorted(clash))
            )
        if self.zwnj_policy not in ZWNJ_POLICIES:
            raise ConfigError(f"zwnj_policy must be one of {ZWNJ_POLICIES}, got {self.zwnj_policy!r}")
        if self.diacritics_policy not in DIACRITICS_POLICIES:
            raise ConfigError(f"diacritics_policy must be one of {DIACRITICS_POLICIES}")
        if self.punctuation_policy not in PUNCTUATION_POLICIES:
            raise ConfigError(f"punctuation_policy must be one of {PUNCTUATION_POLICIES}")

        # One str.translate table covers mapping, deletion and ZWNJ handling.
        # Map targets are pushed through the same table so one pass is final.
        post: dict[int, str | None] = {}
        if self.diacritics_policy == "strip":
            for ch in DIACRITICS:
                post[ord(ch)] = None
        if self.zwnj_policy == "drop":
            post[ord(ZWNJ)] = None
        elif self.zwnj_policy == "to_space":
            post[ord(ZWNJ)] = " "
        table = {ord(s): post.get(ord(t), t) for s, t in char_map}
        for cp, out in post.items():
            table.setdefault(cp, out)
        object.__setattr__(self, "_table", table)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("_table", None)
        d["char_map"] = [[f"U+{ord(s):04X}", f"U+{ord(t):04X}"] for s, t in self.char_map]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationConfig":
        known = {"name", "char_map", "zwnj_policy", "diacritics_policy",
                 "punctuation_policy", "collapse_whitespace"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown normalization keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "char_map" in kwargs:
            kwargs["char_map"] = tuple(
                (_parse_codepoint(s), _parse_codepoint(t)) for s, t in kwargs["char_map"]
            )
        if "collapse_whitespace" in kwargs and not isinstance(kwargs["collapse_whitespace"], bool):
            raise ConfigError("collapse_whitespace must be a boolean")
        return cls(**kwargs)


def _parse_codepoint(value: str) -> str:
    """Accept either a literal character or a ``U+XXXX`` notation."""
    if isinstance(value, str) and value.upper().startswith("U+") and len(value) > 2:
        return chr(int(value[2:], 16))
    return value


DEFAULT_CONFIG = NormalizationConfig()

PROFILES: dict[str, NormalizationConfig] = {
    "default": DEFAULT_CONFIG,
    "digits": NormalizationConfig(name="digits", char_map=DEFAULT_CHAR_MAP + DIGIT_CHAR_MAP),
    "minimal": NormalizationConfig(
        name="minimal", char_map=(), diacritics_policy="keep", punctuation_policy="keep"
    ),
}


def load_config(name_or_path: str | Path) -> NormalizationConfig:
    """Resolve a built-in profile name or a JSON config file."""
    key = str(name_or_path)
    if key in PROFILES:
        return PROFILES[key]
    path = Path(name_or_path)
    with path.open(encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    data.setdefault("name", path.stem)
    return NormalizationConfig.from_dict(data)


@lru_cache(maxsize=None)
def _is_punct(ch: str) -> bool:
    return ch in ARABIC_PUNCTUATION or unicodedata.category(ch).startswith("P")


def normalize_text(text: str, config: NormalizationConfig = DEFAULT_CONFIG) -> str:
    text = text.translate(config._table)
    if config.punctuation_policy == "strip":
        text = "".join(ch for ch in text if not _is_punct(ch))
    if config.collapse_whitespace:
        text = " ".join(text.split())
    return text


def tokenize_words(text: str) -> list[str]:
    """Split normalized text on spaces. ZWNJ stays inside its token."""
    return [tok for tok in text.split(" ") if tok]


def char_sequence(text: str) -> list[str]:
    return list(text)
