"""Grouped metric aggregation over manifest metadata.

Cells are macro averages (mean of per-utterance fractions, in percent) over
the utterances of one system falling in one group. Margins of a two-way
table are utterance-count-weighted means of the cells they span, which makes
them equal to the macro average over the union of those cells.
"""

from __future__ import annotations

import math
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import UtteranceRecord, category_value
from .metrics import METRICS, UtteranceScore

DIMENSIONS = (
    "gender", "age", "accent", "formality", "semantic_content", "data_source",
    "acoustic_environment", "spontaneous", "speaker_class", "accent_class",
)
UNKNOWN = "unknown"

GroupKey = tuple  # tuple of (dimension, value) pairs, in grouping order


class UnknownDimension(ValueError):
    pass


class UnresolvedId(ValueError):
    pass


class DimensionalityError(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    cer: float
    wer: float
    sw_wer: float
    count: int

    def metric(self, name: str) -> float:
        return getattr(self, name)

    @classmethod
    def weighted(cls, cells: Sequence["Cell"]) -> "Cell":
        n = sum(c.count for c in cells)
        if n == 0:
            raise EmptyInput("no utterances to combine")
        vals = {m: math.fsum(c.count * c.metric(m) for c in cells) / n for m in METRICS}
        return cls(count=n, **vals)


@dataclass(frozen=True)
class BreakdownRow:
    system: str
    key: GroupKey
    cell: Cell

    @property
    def key_label(self) -> str:
        return ", ".join(f"{d}={v}" for d, v in self.key)


@dataclass
class BreakdownTable:
    dimensions: tuple[str, ...]
    systems: list[str]
    rows: list[BreakdownRow]
    best: dict[tuple[GroupKey, str], list[str]] = field(default_factory=dict)

    def cell(self, system: str, key: GroupKey) -> Cell:
        for row in self.rows:
            if row.system == system and row.key == key:
                return row.cell
        raise KeyError((system, key))

    def keys(self) -> list[GroupKey]:
        return sorted({row.key for row in self.rows})

    def is_best(self, system: str, key: GroupKey, metric: str) -> bool:
        return system in self.best.get((key, metric), ())


def _check_dimensions(dimensions: Sequence[str]) -> tuple[str, ...]:
    dims = tuple(dimensions)
    if not dims:
        raise UnknownDimension("at least one dimension is required")
    for d in dims:
        if d not in DIMENSIONS:
            raise UnknownDimension(f"unknown dimension {d!r}; choose from {', '.join(DIMENSIONS)}")
    if len(set(dims)) != len(dims):
        raise UnknownDimension(f"repeated dimension in {dims}")
    return dims


def _group_key(record: UtteranceRecord, dims: Sequence[str]) -> GroupKey:
    return tuple((d, category_value(record, d) or UNKNOWN) for d in dims)


def _macro_cell(scores: Sequence[UtteranceScore]) -> Cell:
    n = len(scores)
    vals = {m: 100.0 * math.fsum(getattr(s, m) for s in scores) / n for m in METRICS}
    return Cell(count=n, **vals)


def _system_order(scores: Iterable[UtteranceScore]) -> list[str]:
    order: dict[str, None] = {}
    for s in scores:
        order.setdefault(s.system_name, None)
    return list(order)


def _mark_best(items: Iterable[tuple[str, Cell]]) -> dict[str, list[str]]:
    items = list(items)
    best = {}
    for m in METRICS:
        low = min(c.metric(m) for _, c in items)
        best[m] = [s for s, c in items if math.isclose(c.metric(m), low, rel_tol=0.0, abs_tol=1e-12)]
    return best


def group_scores(
    scores: Iterable[UtteranceScore],
    records: Iterable[UtteranceRecord] | Mapping[str, UtteranceRecord],
    dimensions: Sequence[str],
    system_order: Optional[Sequence[str]] = None,
) -> BreakdownTable:
    dims = _check_dimensions(dimensions)
    by_id = records if isinstance(records, Mapping) else {r.id: r for r in records}
    scores = list(scores)
    systems = list(system_order) if system_order else _system_order(scores)
    buckets: dict[tuple[str, GroupKey], list[UtteranceScore]] = defaultdict(list)
    for s in scores:
        rec = by_id.get(s.utterance_id)
        if rec is None:
            raise UnresolvedId(f"score id {s.utterance_id!r} is not in the manifest")
        buckets[(s.system_name, _group_key(rec, dims))].append(s)

    rows = []
    for system in systems:
        keys = sorted(k for (sys_name, k) in buckets if sys_name == system)
        for key in keys:
            group = sorted(buckets[(system, key)], key=lambda s: s.utterance_id)
            rows.append(BreakdownRow(system, key, _macro_cell(group)))

    table = BreakdownTable(dims, systems, rows)
    for key in table.keys():
        marks = _mark_best((r.system, r.cell) for r in rows if r.key == key)
        for m, winners in marks.items():
            table.best[(key, m)] = winners
    return table


@dataclass
class CrossTab:
    """Two-way layout for one system: first dimension across the columns,
    second dimension down the rows (the formality x noise table shape)."""

    system: str
    col_dim: str
    row_dim: str
    col_values: list[str]
    row_values: list[str]
    cells: dict[tuple[str, str], Cell]
    row_margins: dict[str, Cell]
    col_margins: dict[str, Cell]
    total: Cell


def cross_tabulate(table: BreakdownTable) -> dict[str, CrossTab]:
    if len(table.dimensions) != 2:
        raise DimensionalityError(
            f"cross tabulation needs exactly two dimensions, got {len(table.dimensions)}"
        )
    col_dim, row_dim = table.dimensions
    out = {}
    for system in table.systems:
        cells = {}
        for r in table.rows:
            if r.system == system:
                (_, col), (_, row) = r.key
                cells[(row, col)] = r.cell
        if not cells:
            continue
        col_values = sorted({c for _, c in cells})
        row_values = sorted({r for r, _ in cells})
        row_margins = {
            rv: Cell.weighted([cells[(rv, cv)] for cv in col_values if (rv, cv) in cells])
            for rv in row_values
        }
        col_margins = {
            cv: Cell.weighted([cells[(rv, cv)] for rv in row_values if (rv, cv) in cells])
            for cv in col_values
        }
        total = Cell.weighted(list(cells.values()))
        out[system] = CrossTab(system, col_dim, row_dim, col_values, row_values,
                               cells, row_margins, col_margins, total)
    return out


@dataclass
class Comparison:
    rows: list[tuple[str, Cell]]
    best: dict[str, list[str]]

    def is_best(self, system: str, metric: str) -> bool:
        return system in self.best[metric]


def compare_systems(summaries: Iterable) -> Comparison:
    """Mark the lowest value per metric; ties mark every minimal system.

    Accepts objects with ``system_name`` and ``cer``/``wer``/``sw_wer``
    attributes (e.g. CorpusSummary) or ``(name, Cell)`` pairs.
    """
    rows = []
    for item in summaries:
        if isinstance(item, tuple):
            name, cell = item
        else:
            name = item.system_name
            cell = Cell(item.cer, item.wer, item.sw_wer, getattr(item, "utterance_count", 0))
        rows.append((name, cell))
    if not rows:
        raise EmptyInput("no systems to compare")
    return Comparison(rows, _mark_best(rows))


@dataclass(frozen=True)
class BoxStats:
    system: str
    key: GroupKey
    count: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    lower_whisker: float
    upper_whisker: float
    outliers: tuple[float, ...]


def box_statistics(
    scores: Iterable[UtteranceScore],
    records: Iterable[UtteranceRecord] | Mapping[str, UtteranceRecord],
    dimensions: Sequence[str],
    metric: str = "sw_wer",
) -> list[BoxStats]:
    """Quartiles (inclusive method) and 1.5 x IQR whiskers per system/group.

    Values are percentages. No outliers are removed; they are listed so the
    consumer can decide.
    """
    dims = _check_dimensions(dimensions)
    by_id = records if isinstance(records, Mapping) else {r.id: r for r in records}
    scores = list(scores)
    buckets: dict[tuple[str, GroupKey], list[float]] = defaultdict(list)
    for s in scores:
        rec = by_id.get(s.utterance_id)
        if rec is None:
            raise UnresolvedId(f"score id {s.utterance_id!r} is not in the manifest")
        buckets[(s.system_name, _group_key(rec, dims))].append(100.0 * getattr(s, metric))
    out = []
    for system in _system_order(scores):
        for key in sorted(k for (name, k) in buckets if name == system):
            vals = sorted(buckets[(system, key)])
            if len(vals) > 1:
                q1, med, q3 = statistics.quantiles(vals, n=4, method="inclusive")
            else:
                q1 = med = q3 = vals[0]
            iqr = q3 - q1
            lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
            inside = [v for v in vals if lo_fence <= v <= hi_fence]
            out.append(BoxStats(
                system, key, len(vals), vals[0], q1, med, q3, vals[-1],
                inside[0], inside[-1], tuple(v for v in vals if v < lo_fence or v > hi_fence),
            ))
    return out
