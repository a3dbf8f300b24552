"""Reference manifests, hypothesis files and dataset statistics."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .textnorm import DEFAULT_CONFIG, NormalizationConfig, normalize_text, tokenize_words

MANIFEST_FIELDS = (
    "id", "text", "duration_s", "num_speakers", "gender", "age", "accent", "formality",
    "semantic_content", "data_source", "acoustic_environment", "spontaneous", "speaker_ids",
)

GENDERS = ("male", "female", "mix")
AGES = ("child", "teen", "adult", "senior", "mix")
FORMALITIES = ("formal", "informal")
ENVIRONMENTS = ("clean", "noisy", "phone", "reverberant")
ACCENTS = (
    "Baluchi", "Dari", "Isfahani", "Jonubi", "Kermani", "Kurdish", "Lori", "Mashhadi",
    "Shirazi", "Shomali", "Standard", "Turkish", "Yazdi",
)
_ACCENT_LOOKUP = {a.lower(): a for a in ACCENTS}
_ENUMS = {
    "gender": GENDERS,
    "age": AGES,
    "formality": FORMALITIES,
    "acoustic_environment": ENVIRONMENTS,
}
_TRUE = {"true", "yes", "y", "1"}
_FALSE = {"false", "no", "n", "0"}

# categorical fields reported in dataset statistics
STAT_DIMENSIONS = (
    "gender", "age", "accent", "formality", "semantic_content", "data_source",
    "acoustic_environment", "spontaneous", "speaker_class",
)


class CorpusError(ValueError):
    """Base class for manifest / hypothesis validation failures."""


class SchemaError(CorpusError):
    pass


class ParseError(CorpusError):
    pass


class DuplicateId(CorpusError):
    pass


class MissingId(CorpusError):
    pass


class EmptyCorpus(CorpusError):
    pass


@dataclass(frozen=True)
class Issue:
    line: int
    utterance_id: Optional[str]
    message: str
    severity: str = "error"  # "error" rows are skipped, "warning" rows are kept

    def __str__(self) -> str:
        where = f"line {self.line}"
        if self.utterance_id:
            where += f" (id {self.utterance_id})"
        return f"{where}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    text: str
    duration_s: Optional[float] = None
    num_speakers: Optional[int] = None
    gender: Optional[str] = None
    age: Optional[str] = None
    accent: Optional[str] = None
    formality: Optional[str] = None
    semantic_content: Optional[str] = None
    data_source: Optional[str] = None
    acoustic_environment: Optional[str] = None
    spontaneous: Optional[bool] = None
    speaker_ids: Optional[tuple[str, ...]] = None

    @property
    def speaker_class(self) -> Optional[str]:
        if self.num_speakers is None:
            return None
        return "single" if self.num_speakers == 1 else "multiple"

    @property
    def accent_class(self) -> Optional[str]:
        if self.accent is None:
            return None
        return "standard" if self.accent == "Standard" else "accented"

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.speaker_ids is not None:
            d["speaker_ids"] = list(self.speaker_ids)
        return d


@dataclass
class HypothesisSet:
    system_name: str
    hypotheses: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.hypotheses)

    def get(self, utt_id: str, default: Optional[str] = None) -> Optional[str]:
        return self.hypotheses.get(utt_id, default)


def _blank(value) -> bool:
    return value is None or (isinstance(value, str) and value.strip() == "")


def _coerce_record(raw: dict, strict: bool, warnings: list[str]) -> UtteranceRecord:
    """Validate one raw row. Raises SchemaError on hard violations; soft ones
    (only possible in lenient mode) are appended to ``warnings``."""
    unknown = sorted(set(raw) - set(MANIFEST_FIELDS))
    if unknown:
        msg = f"unknown fields {unknown}"
        if strict:
            raise SchemaError(msg)
        warnings.append(msg)

    utt_id = raw.get("id")
    if _blank(utt_id):
        raise SchemaError("missing id")
    utt_id = str(utt_id).strip()
    text = raw.get("text")
    if not isinstance(text, str) or not text.strip():
        raise SchemaError("missing or empty text")

    values: dict = {"id": utt_id, "text": text}

    dur = raw.get("duration_s")
    if not _blank(dur):
        try:
            dur = float(dur)
        except (TypeError, ValueError):
            raise SchemaError(f"duration_s is not a number: {dur!r}") from None
        if not math.isfinite(dur) or dur <= 0:
            raise SchemaError(f"duration_s must be > 0, got {dur}")
        values["duration_s"] = dur

    ns = raw.get("num_speakers")
    if not _blank(ns):
        try:
            ns_int = int(ns)
        except (TypeError, ValueError):
            raise SchemaError(f"num_speakers is not an integer: {ns!r}") from None
        if isinstance(ns, float) and ns != ns_int or isinstance(ns, bool):
            raise SchemaError(f"num_speakers is not an integer: {ns!r}")
        if ns_int < 1:
            raise SchemaError(f"num_speakers must be >= 1, got {ns_int}")
        values["num_speakers"] = ns_int

    for name, allowed in _ENUMS.items():
        v = raw.get(name)
        if _blank(v):
            continue
        v = str(v).strip().lower()
        if v not in allowed:
            msg = f"{name} {v!r} not in {list(allowed)}"
            if strict:
                raise SchemaError(msg)
            warnings.append(msg)
        values[name] = v

    accent = raw.get("accent")
    if not _blank(accent):
        accent = str(accent).strip()
        canon = _ACCENT_LOOKUP.get(accent.lower())
        if canon is None:
            msg = f"accent {accent!r} is not one of the canonical accents"
            if strict:
                raise SchemaError(msg)
            warnings.append(msg)
        values["accent"] = canon or accent

    for name in ("semantic_content", "data_source"):
        v = raw.get(name)
        if not _blank(v):
            values[name] = str(v).strip().lower()

    sp = raw.get("spontaneous")
    if not _blank(sp):
        if isinstance(sp, bool):
            values["spontaneous"] = sp
        elif str(sp).strip().lower() in _TRUE:
            values["spontaneous"] = True
        elif str(sp).strip().lower() in _FALSE:
            values["spontaneous"] = False
        else:
            raise SchemaError(f"spontaneous is not a boolean: {sp!r}")

    spk = raw.get("speaker_ids")
    if not _blank(spk):
        if isinstance(spk, str):
            spk = [s for s in (p.strip() for p in spk.split(",")) if s]
        elif not isinstance(spk, list):
            raise SchemaError("speaker_ids must be a list or a comma-separated string")
        values["speaker_ids"] = tuple(str(s) for s in spk)

    return UtteranceRecord(**values)


def _sniff_jsonl(path: Path, head: str) -> bool:
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".json", ".ndjson"):
        return True
    if suffix in (".tsv", ".tab"):
        return False
    return head.lstrip().startswith("{")


def _read_text(path) -> tuple[Path, str]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return path, fh.read()


def _manifest_rows(path: Path, content: str):
    """Yield (line_number, raw dict or exception)."""
    if _sniff_jsonl(path, content[:200]):
        for lineno, line in enumerate(content.splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, SchemaError(f"invalid JSON: {exc.msg}")
                continue
            if not isinstance(obj, dict):
                yield lineno, SchemaError("expected a JSON object")
                continue
            yield lineno, obj
    else:
        reader = csv.reader(io.StringIO(content), delimiter="\t", quoting=csv.QUOTE_NONE)
        header = None
        for row in reader:
            lineno = reader.line_num
            if not any(cell.strip() for cell in row):
                continue
            if header is None:
                header = [h.strip() for h in row]
                if "id" not in header or "text" not in header:
                    yield lineno, SchemaError("TSV header must contain 'id' and 'text'")
                    return
                continue
            if len(row) != len(header):
                yield lineno, SchemaError(f"expected {len(header)} columns, got {len(row)}")
                continue
            yield lineno, dict(zip(header, row))


def load_manifest(
    path,
    mode: str = "strict",
    duration_range: Optional[tuple[float, float]] = None,
) -> tuple[list[UtteranceRecord], list[Issue]]:
    """Parse a JSON-lines or TSV manifest.

    Strict mode raises on the first violation. Lenient mode skips bad rows
    (``error`` issues) and keeps rows with out-of-vocabulary labels
    (``warning`` issues). Duplicate ids are fatal in both modes.
    ``duration_range`` enables an optional inclusive bounds check.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    strict = mode == "strict"
    path, content = _read_text(path)
    records: list[UtteranceRecord] = []
    issues: list[Issue] = []
    seen: dict[str, int] = {}
    for lineno, raw in _manifest_rows(path, content):
        raw_id = raw.get("id") if isinstance(raw, dict) else None
        raw_id = None if _blank(raw_id) else str(raw_id).strip()
        warnings: list[str] = []
        try:
            if isinstance(raw, Exception):
                raise raw
            rec = _coerce_record(raw, strict, warnings)
            if duration_range is not None and rec.duration_s is not None:
                lo, hi = duration_range
                if not lo <= rec.duration_s <= hi:
                    raise SchemaError(f"duration_s {rec.duration_s} outside [{lo}, {hi}]")
        except SchemaError as exc:
            if strict:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
            issues.append(Issue(lineno, raw_id, str(exc), "error"))
            continue
        if rec.id in seen:
            raise DuplicateId(f"{path}:{lineno}: duplicate id {rec.id!r} (first on line {seen[rec.id]})")
        seen[rec.id] = lineno
        issues.extend(Issue(lineno, rec.id, w, "warning") for w in warnings)
        records.append(rec)
    return records, issues


def dump_manifest(records: Iterable[UtteranceRecord], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def load_hypotheses(
    path,
    system_name: str,
    manifest_ids: Optional[Iterable[str]] = None,
    strict: bool = True,
) -> HypothesisSet:
    """Read ``id<TAB>text`` lines or JSON lines with ``id`` and ``text``.

    With ``manifest_ids`` and ``strict``, ids absent from the manifest raise
    :class:`MissingId`.
    """
    path, content = _read_text(path)
    hyps: dict[str, str] = {}
    lines: dict[str, int] = {}
    as_json = _sniff_jsonl(path, content[:200])
    for lineno, line in enumerate(content.splitlines(), 1):
        if not line.strip():
            continue
        if as_json:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict) or "id" not in obj:
                raise ParseError(f"{path}:{lineno}: expected an object with 'id' and 'text'")
            utt_id, text = str(obj["id"]), obj.get("text") or ""
            if not isinstance(text, str):
                raise ParseError(f"{path}:{lineno}: 'text' must be a string")
        else:
            if "\t" not in line:
                raise ParseError(f"{path}:{lineno}: missing tab separator")
            utt_id, text = line.split("\t", 1)
            utt_id = utt_id.strip()
        if not utt_id:
            raise ParseError(f"{path}:{lineno}: empty id")
        if utt_id in hyps:
            raise DuplicateId(f"{path}:{lineno}: duplicate id {utt_id!r} (first on line {lines[utt_id]})")
        hyps[utt_id] = text
        lines[utt_id] = lineno
    if manifest_ids is not None and strict:
        known = set(manifest_ids)
        for utt_id in hyps:
            if utt_id not in known:
                raise MissingId(f"{path}:{lines[utt_id]}: id {utt_id!r} is not in the manifest")
    return HypothesisSet(system_name, hyps)


def join_hypotheses(
    records: Sequence[UtteranceRecord],
    hyps: HypothesisSet,
    strict: bool = True,
) -> tuple[list[tuple[UtteranceRecord, str]], list[str]]:
    """Pair every manifest record with its hypothesis.

    Strict mode requires an exact id match in both directions. Lenient mode
    scores a missing hypothesis as empty and ignores extra ids; both cases
    are returned as warnings.
    """
    warnings = []
    pairs = []
    known = set()
    for rec in records:
        known.add(rec.id)
        text = hyps.get(rec.id)
        if text is None:
            if strict:
                raise MissingId(f"system {hyps.system_name!r}: no hypothesis for id {rec.id!r}")
            warnings.append(f"system {hyps.system_name!r}: no hypothesis for id {rec.id!r}; scored as empty")
            text = ""
        pairs.append((rec, text))
    extra = sorted(set(hyps.hypotheses) - known)
    if extra:
        if strict:
            raise MissingId(f"system {hyps.system_name!r}: id {extra[0]!r} is not in the manifest")
        warnings.append(f"system {hyps.system_name!r}: ignoring {len(extra)} ids not in the manifest")
    return pairs, warnings


@dataclass
class DatasetStats:
    utterance_count: int
    total_duration_h: float
    min_dur_s: Optional[float]
    max_dur_s: Optional[float]
    avg_dur_s: Optional[float]
    word_count: int
    unique_word_count: int
    speaker_count: Optional[int]
    missing_duration: int
    histogram: list[tuple[float, float, int]]
    category_proportions: dict[str, dict[str, float]]
    category_counts: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["histogram"] = [{"lo": lo, "hi": hi, "count": c} for lo, hi, c in self.histogram]
        return d


def category_value(record: UtteranceRecord, dimension: str) -> Optional[str]:
    """Record value for a grouping dimension, rendered as a string."""
    value = getattr(record, dimension)
    if value is None:
        return None
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def duration_histogram(durations: Sequence[float], bin_width: float = 2.0) -> list[tuple[float, float, int]]:
    """Fixed-width bins from 0 up to the max duration; the last bin is closed."""
    if not durations:
        return []
    top = max(durations)
    nbins = max(1, math.ceil(top / bin_width))
    counts = [0] * nbins
    for d in durations:
        counts[min(int(d // bin_width), nbins - 1)] += 1
    return [(k * bin_width, (k + 1) * bin_width, c) for k, c in enumerate(counts)]


def dataset_statistics(
    records: Sequence[UtteranceRecord],
    norm: NormalizationConfig = DEFAULT_CONFIG,
    bin_width: float = 2.0,
) -> DatasetStats:
    if not records:
        raise EmptyCorpus("no records")
    durations = sorted(r.duration_s for r in records if r.duration_s is not None)
    total = math.fsum(durations)
    words = Counter()
    word_count = 0
    for r in records:
        toks = tokenize_words(normalize_text(r.text, norm))
        word_count += len(toks)
        words.update(toks)
    speakers = {s for r in records if r.speaker_ids for s in r.speaker_ids}
    has_speakers = any(r.speaker_ids for r in records)

    counts: dict[str, dict[str, int]] = {}
    props: dict[str, dict[str, float]] = {}
    for dim in STAT_DIMENSIONS:
        tally = Counter(v for v in (category_value(r, dim) for r in records) if v is not None)
        if not tally:
            continue
        n = sum(tally.values())
        counts[dim] = dict(sorted(tally.items()))
        props[dim] = {k: c / n for k, c in sorted(tally.items())}

    return DatasetStats(
        utterance_count=len(records),
        total_duration_h=total / 3600.0,
        min_dur_s=durations[0] if durations else None,
        max_dur_s=durations[-1] if durations else None,
        avg_dur_s=total / len(durations) if durations else None,
        word_count=word_count,
        unique_word_count=len(words),
        speaker_count=len(speakers) if has_speakers else None,
        missing_duration=len(records) - len(durations),
        histogram=duration_histogram(durations, bin_width),
        category_proportions=props,
        category_counts=counts,
    )
